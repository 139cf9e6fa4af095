//! Variation operators: size-controlled random initialization, subtree
//! crossover, the four mutation moves, and tournament selection.
//!
//! "Parameter" here means any tunable number in a tree: constant values and
//! the scaling coefficient carried by each variable leaf. Every leaf holds
//! exactly one, so the parameter-perturbation moves always apply.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::tree::{ExprNode, ExpressionTree, Var};
use super::GpConfig;

/// Chance that a crossover point lands on an internal node when the tree
/// has any.
const INTERNAL_NODE_BIAS: f64 = 0.9;
/// Point reselections before crossover falls back to copying parent `a`.
const CROSSOVER_RETRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    Exp,
    Log,
}

impl OpKind {
    const BINARY: [OpKind; 4] = [OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Div];
    const UNARY: [OpKind; 2] = [OpKind::Exp, OpKind::Log];

    fn arity(self) -> usize {
        match self {
            OpKind::Exp | OpKind::Log => 1,
            _ => 2,
        }
    }

    fn build(self, mut kids: Vec<ExprNode>) -> ExprNode {
        match self {
            OpKind::Exp => ExprNode::Exp(Box::new(kids.pop().unwrap())),
            OpKind::Log => ExprNode::Log(Box::new(kids.pop().unwrap())),
            binary => {
                let b = Box::new(kids.pop().unwrap());
                let a = Box::new(kids.pop().unwrap());
                match binary {
                    OpKind::Add => ExprNode::Add(a, b),
                    OpKind::Sub => ExprNode::Sub(a, b),
                    OpKind::Mul => ExprNode::Mul(a, b),
                    _ => ExprNode::ProtDiv(a, b),
                }
            }
        }
    }
}

fn random_leaf(config: &GpConfig, rng: &mut ChaCha8Rng) -> ExprNode {
    if rng.gen::<f64>() < config.variable_leaf_probability {
        let var = Var::ALL[rng.gen_range(0..Var::ALL.len())];
        let draw: f64 = StandardNormal.sample(rng);
        ExprNode::Variable { var, scale: draw * config.scale_sigma }
    } else {
        ExprNode::Constant(rng.gen_range(config.constant_range.0..=config.constant_range.1))
    }
}

/// Build a random tree of roughly uniform size in `1..=max_length`, never
/// exceeding the length or depth limit. Grows breadth-first from a queue of
/// open child slots, expanding a uniformly chosen slot each step; slots at
/// the depth limit, and any slots left once the size budget is reached, are
/// filled with leaves.
pub fn ptc2_init(config: &GpConfig, rng: &mut ChaCha8Rng) -> ExpressionTree {
    let target = rng.gen_range(1..=config.max_length.max(1));
    if target == 1 || config.max_depth <= 1 {
        return ExpressionTree::new(random_leaf(config, rng));
    }

    // Arena of placed nodes; function nodes hold child arena indices.
    enum Placed {
        Op(OpKind, [usize; 2]),
        Leaf(ExprNode),
    }
    struct Slot {
        parent: usize,
        child: usize,
        depth: usize,
    }

    let mut arena: Vec<Placed> = Vec::with_capacity(target);
    let mut open: Vec<Slot> = Vec::new();
    // Projected final length: placed nodes plus one leaf per open slot.
    let mut projected = 1;

    let root_op = random_op(target >= 3, rng);
    projected += root_op.arity();
    arena.push(Placed::Op(root_op, [usize::MAX; 2]));
    for child in 0..root_op.arity() {
        open.push(Slot { parent: 0, child, depth: 2 });
    }

    while !open.is_empty() {
        let slot = open.swap_remove(rng.gen_range(0..open.len()));
        let binary_ok = slot.depth < config.max_depth && projected + 2 <= target;
        let unary_ok = slot.depth < config.max_depth && projected + 1 <= target;
        let index = arena.len();
        if !unary_ok && !binary_ok {
            arena.push(Placed::Leaf(random_leaf(config, rng)));
        } else {
            let op = random_op(binary_ok, rng);
            projected += op.arity();
            arena.push(Placed::Op(op, [usize::MAX; 2]));
            for child in 0..op.arity() {
                open.push(Slot { parent: index, child, depth: slot.depth + 1 });
            }
        }
        if let Placed::Op(_, kids) = &mut arena[slot.parent] {
            kids[slot.child] = index;
        }
    }

    fn assemble(arena: &[Placed], index: usize) -> ExprNode {
        match &arena[index] {
            Placed::Leaf(node) => node.clone(),
            Placed::Op(op, kids) => {
                let children: Vec<ExprNode> = (0..op.arity())
                    .map(|c| assemble(arena, kids[c]))
                    .collect();
                op.build(children)
            }
        }
    }
    let tree = ExpressionTree::new(assemble(&arena, 0));
    debug_assert!(tree.within_limits(config.max_length, config.max_depth));
    tree
}

fn random_op(binary_ok: bool, rng: &mut ChaCha8Rng) -> OpKind {
    if binary_ok {
        let all = [
            OpKind::Add,
            OpKind::Sub,
            OpKind::Mul,
            OpKind::Div,
            OpKind::Exp,
            OpKind::Log,
        ];
        all[rng.gen_range(0..all.len())]
    } else {
        OpKind::UNARY[rng.gen_range(0..OpKind::UNARY.len())]
    }
}

/// Pick a crossover point: 90% internal nodes, 10% leaves; a single-leaf
/// tree yields its root.
pub(crate) fn choose_point(root: &ExprNode, rng: &mut ChaCha8Rng) -> usize {
    let nodes = root.nodes();
    let internal: Vec<usize> = (0..nodes.len()).filter(|&i| !nodes[i].is_leaf()).collect();
    if internal.is_empty() {
        return 0;
    }
    let leaves: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].is_leaf()).collect();
    if rng.gen::<f64>() < INTERNAL_NODE_BIAS {
        internal[rng.gen_range(0..internal.len())]
    } else {
        leaves[rng.gen_range(0..leaves.len())]
    }
}

/// Replace a random subtree of `a` with a random subtree of `b`. Children
/// that would break the length or depth limit trigger reselection of both
/// points, up to a bounded number of attempts; after that `a` is returned
/// unchanged.
pub fn subtree_crossover(
    a: &ExpressionTree,
    b: &ExpressionTree,
    config: &GpConfig,
    rng: &mut ChaCha8Rng,
) -> ExpressionTree {
    for _ in 0..CROSSOVER_RETRIES {
        let point = choose_point(a.root(), rng);
        let donor_index = choose_point(b.root(), rng);
        let donor = b.root().nodes()[donor_index].clone();
        let child = ExpressionTree::new(a.root().with_replaced(point, &donor));
        if child.within_limits(config.max_length, config.max_depth) {
            return child;
        }
    }
    a.clone()
}

/// Apply one of four moves, drawn uniformly among those applicable to the
/// tree: perturb one parameter, perturb every parameter, swap a function
/// node's symbol within its arity class, or re-point a variable leaf at a
/// different input (keeping its scale). Tree shape never changes, so limits
/// are preserved.
pub fn mutate(tree: &ExpressionTree, rng: &mut ChaCha8Rng) -> ExpressionTree {
    let has_function = tree.root().nodes().iter().any(|n| !n.is_leaf());
    let has_variable = tree
        .root()
        .nodes()
        .iter()
        .any(|n| matches!(n, ExprNode::Variable { .. }));
    loop {
        match rng.gen_range(0..4) {
            0 => return perturb_parameters(tree, Some(pick_leaf(tree, rng)), rng),
            1 => return perturb_parameters(tree, None, rng),
            2 if has_function => return change_symbol(tree, rng),
            3 if has_variable => return change_variable(tree, rng),
            // Inapplicable move: redraw, which is uniform over the
            // applicable ones by rejection.
            _ => continue,
        }
    }
}

fn pick_leaf(tree: &ExpressionTree, rng: &mut ChaCha8Rng) -> usize {
    let leaf_count = tree
        .root()
        .nodes()
        .iter()
        .filter(|n| n.is_leaf())
        .count();
    rng.gen_range(0..leaf_count)
}

/// Add N(0,1) noise to the parameter of leaf number `which` (in preorder),
/// or of every leaf when `which` is None.
fn perturb_parameters(
    tree: &ExpressionTree,
    which: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> ExpressionTree {
    fn go(
        node: &ExprNode,
        leaf_counter: &mut usize,
        which: Option<usize>,
        rng: &mut ChaCha8Rng,
    ) -> ExprNode {
        match node {
            ExprNode::Add(a, b) => ExprNode::Add(
                Box::new(go(a, leaf_counter, which, rng)),
                Box::new(go(b, leaf_counter, which, rng)),
            ),
            ExprNode::Sub(a, b) => ExprNode::Sub(
                Box::new(go(a, leaf_counter, which, rng)),
                Box::new(go(b, leaf_counter, which, rng)),
            ),
            ExprNode::Mul(a, b) => ExprNode::Mul(
                Box::new(go(a, leaf_counter, which, rng)),
                Box::new(go(b, leaf_counter, which, rng)),
            ),
            ExprNode::ProtDiv(a, b) => ExprNode::ProtDiv(
                Box::new(go(a, leaf_counter, which, rng)),
                Box::new(go(b, leaf_counter, which, rng)),
            ),
            ExprNode::Exp(a) => ExprNode::Exp(Box::new(go(a, leaf_counter, which, rng))),
            ExprNode::Log(a) => ExprNode::Log(Box::new(go(a, leaf_counter, which, rng))),
            leaf => {
                let here = *leaf_counter;
                *leaf_counter += 1;
                let hit = which.map(|w| w == here).unwrap_or(true);
                if !hit {
                    return leaf.clone();
                }
                let noise: f64 = StandardNormal.sample(rng);
                match leaf {
                    ExprNode::Variable { var, scale } => ExprNode::Variable {
                        var: *var,
                        scale: scale + noise,
                    },
                    ExprNode::Constant(c) => ExprNode::Constant(c + noise),
                    _ => unreachable!(),
                }
            }
        }
    }
    let mut counter = 0;
    ExpressionTree::new(go(tree.root(), &mut counter, which, rng))
}

fn change_symbol(tree: &ExpressionTree, rng: &mut ChaCha8Rng) -> ExpressionTree {
    let nodes = tree.root().nodes();
    let functions: Vec<usize> = (0..nodes.len()).filter(|&i| !nodes[i].is_leaf()).collect();
    let index = functions[rng.gen_range(0..functions.len())];
    let replacement = match nodes[index] {
        ExprNode::Exp(a) => ExprNode::Log(a.clone()),
        ExprNode::Log(a) => ExprNode::Exp(a.clone()),
        binary => {
            let (current, a, b) = match binary {
                ExprNode::Add(a, b) => (0, a, b),
                ExprNode::Sub(a, b) => (1, a, b),
                ExprNode::Mul(a, b) => (2, a, b),
                ExprNode::ProtDiv(a, b) => (3, a, b),
                _ => unreachable!(),
            };
            let next = (current + rng.gen_range(1..OpKind::BINARY.len())) % OpKind::BINARY.len();
            OpKind::BINARY[next].build(vec![(**a).clone(), (**b).clone()])
        }
    };
    ExpressionTree::new(tree.root().with_replaced(index, &replacement))
}

fn change_variable(tree: &ExpressionTree, rng: &mut ChaCha8Rng) -> ExpressionTree {
    let nodes = tree.root().nodes();
    let variables: Vec<usize> = (0..nodes.len())
        .filter(|&i| matches!(nodes[i], ExprNode::Variable { .. }))
        .collect();
    let index = variables[rng.gen_range(0..variables.len())];
    let (var, scale) = match nodes[index] {
        ExprNode::Variable { var, scale } => (*var, *scale),
        _ => unreachable!(),
    };
    let current = Var::ALL.iter().position(|&v| v == var).unwrap();
    let next = (current + rng.gen_range(1..Var::ALL.len())) % Var::ALL.len();
    let replacement = ExprNode::Variable { var: Var::ALL[next], scale };
    ExpressionTree::new(tree.root().with_replaced(index, &replacement))
}

/// Draw `k` population indices uniformly with replacement and return the
/// one with the lowest fitness; exact ties go to the lower index.
pub fn tournament_select(fitness: &[f64], k: usize, rng: &mut ChaCha8Rng) -> usize {
    assert!(!fitness.is_empty(), "empty population");
    let n = fitness.len();
    let mut best = rng.gen_range(0..n);
    for _ in 1..k {
        let c = rng.gen_range(0..n);
        if fitness[c] < fitness[best] || (fitness[c] == fitness[best] && c < best) {
            best = c;
        }
    }
    best
}
