//! Expression trees: protected evaluation, the canonical prefix text form,
//! and algebraic simplification.
//!
//! Evaluation is total: protected division and log, a capped exp argument,
//! and a final clamp of every node's result into `[-VALUE_CAP, VALUE_CAP]`
//! guarantee a finite value for any tree at any input. The clamp on every
//! node (not just the protected ones) is what makes simplification's
//! identity rewrites exact: `x + 0` and `x` then agree bit-for-bit because
//! no intermediate can sit outside the representable band.

use std::fmt;

use crate::error::{Error, Result};

/// Divisor magnitudes below this make protected division return 1.
pub const PROT_DIV_EPS: f64 = 1e-12;
/// Protected log evaluates ln(max(|x|, LOG_FLOOR)).
pub const LOG_FLOOR: f64 = 1e-12;
/// Exp arguments are capped here before exponentiation.
pub const EXP_ARG_CAP: f64 = 700.0;
/// Every node result is clamped into [-VALUE_CAP, VALUE_CAP].
pub const VALUE_CAP: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Temperature in degrees Celsius.
    Temp,
    /// Strain rate in 1/s.
    PhiDot,
    /// Base-10 logarithm of the strain rate, precomputed as its own input.
    Log10PhiDot,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::Temp, Var::PhiDot, Var::Log10PhiDot];

    pub fn name(self) -> &'static str {
        match self {
            Var::Temp => "T",
            Var::PhiDot => "phidot",
            Var::Log10PhiDot => "log10phidot",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.iter().copied().find(|v| v.name() == name)
    }

    fn value(self, temp_c: f64, phi_dot: f64) -> f64 {
        match self {
            Var::Temp => temp_c,
            Var::PhiDot => phi_dot,
            Var::Log10PhiDot => phi_dot.abs().max(LOG_FLOOR).log10(),
        }
    }
}

/// One node of an expression tree. A variable leaf carries its scaling
/// coefficient, so `(* 0.11 T)` is a single node.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Add(Box<ExprNode>, Box<ExprNode>),
    Sub(Box<ExprNode>, Box<ExprNode>),
    Mul(Box<ExprNode>, Box<ExprNode>),
    ProtDiv(Box<ExprNode>, Box<ExprNode>),
    Exp(Box<ExprNode>),
    Log(Box<ExprNode>),
    Variable { var: Var, scale: f64 },
    Constant(f64),
}

fn finite(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-VALUE_CAP, VALUE_CAP)
    }
}

impl ExprNode {
    pub fn evaluate(&self, temp_c: f64, phi_dot: f64) -> f64 {
        let v = match self {
            ExprNode::Add(a, b) => a.evaluate(temp_c, phi_dot) + b.evaluate(temp_c, phi_dot),
            ExprNode::Sub(a, b) => a.evaluate(temp_c, phi_dot) - b.evaluate(temp_c, phi_dot),
            ExprNode::Mul(a, b) => a.evaluate(temp_c, phi_dot) * b.evaluate(temp_c, phi_dot),
            ExprNode::ProtDiv(a, b) => {
                let d = b.evaluate(temp_c, phi_dot);
                if d.abs() < PROT_DIV_EPS {
                    1.0
                } else {
                    a.evaluate(temp_c, phi_dot) / d
                }
            }
            ExprNode::Exp(a) => a.evaluate(temp_c, phi_dot).min(EXP_ARG_CAP).exp(),
            ExprNode::Log(a) => a.evaluate(temp_c, phi_dot).abs().max(LOG_FLOOR).ln(),
            ExprNode::Variable { var, scale } => scale * var.value(temp_c, phi_dot),
            ExprNode::Constant(c) => *c,
        };
        finite(v)
    }

    pub fn length(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .flatten()
            .map(|k| k.length())
            .sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .flatten()
            .map(|k| k.depth())
            .max()
            .unwrap_or(0)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, ExprNode::Variable { .. } | ExprNode::Constant(_))
    }

    fn children(&self) -> [Option<&ExprNode>; 2] {
        match self {
            ExprNode::Add(a, b)
            | ExprNode::Sub(a, b)
            | ExprNode::Mul(a, b)
            | ExprNode::ProtDiv(a, b) => [Some(a), Some(b)],
            ExprNode::Exp(a) | ExprNode::Log(a) => [Some(a), None],
            _ => [None, None],
        }
    }

    /// Preorder list of all nodes.
    pub fn nodes(&self) -> Vec<&ExprNode> {
        let mut out = Vec::with_capacity(self.length());
        fn walk<'a>(node: &'a ExprNode, out: &mut Vec<&'a ExprNode>) {
            out.push(node);
            for child in node.children().into_iter().flatten() {
                walk(child, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// Copy of the tree with the subtree at preorder index `target`
    /// replaced. Panics if the index is out of range.
    pub fn with_replaced(&self, target: usize, replacement: &ExprNode) -> ExprNode {
        fn go(
            node: &ExprNode,
            counter: &mut usize,
            target: usize,
            rep: &ExprNode,
        ) -> ExprNode {
            let here = *counter;
            *counter += 1;
            if here == target {
                // Advance past the skipped subtree so later siblings keep
                // their original preorder numbering.
                *counter += node.length() - 1;
                return rep.clone();
            }
            match node {
                ExprNode::Add(a, b) => ExprNode::Add(
                    Box::new(go(a, counter, target, rep)),
                    Box::new(go(b, counter, target, rep)),
                ),
                ExprNode::Sub(a, b) => ExprNode::Sub(
                    Box::new(go(a, counter, target, rep)),
                    Box::new(go(b, counter, target, rep)),
                ),
                ExprNode::Mul(a, b) => ExprNode::Mul(
                    Box::new(go(a, counter, target, rep)),
                    Box::new(go(b, counter, target, rep)),
                ),
                ExprNode::ProtDiv(a, b) => ExprNode::ProtDiv(
                    Box::new(go(a, counter, target, rep)),
                    Box::new(go(b, counter, target, rep)),
                ),
                ExprNode::Exp(a) => ExprNode::Exp(Box::new(go(a, counter, target, rep))),
                ExprNode::Log(a) => ExprNode::Log(Box::new(go(a, counter, target, rep))),
                leaf => leaf.clone(),
            }
        }
        let mut counter = 0;
        assert!(target < self.length(), "node index out of range");
        go(self, &mut counter, target, replacement)
    }
}

impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Add(a, b) => write!(f, "(+ {a} {b})"),
            ExprNode::Sub(a, b) => write!(f, "(- {a} {b})"),
            ExprNode::Mul(a, b) => write!(f, "(* {a} {b})"),
            ExprNode::ProtDiv(a, b) => write!(f, "(% {a} {b})"),
            ExprNode::Exp(a) => write!(f, "(exp {a})"),
            ExprNode::Log(a) => write!(f, "(log {a})"),
            ExprNode::Variable { var, scale } => write!(f, "(* {} {})", scale, var.name()),
            ExprNode::Constant(c) => write!(f, "{c}"),
        }
    }
}

/// A tree plus its cached node count and depth (a leaf has depth 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTree {
    root: ExprNode,
    length: usize,
    depth: usize,
}

impl ExpressionTree {
    pub fn new(root: ExprNode) -> Self {
        let length = root.length();
        let depth = root.depth();
        ExpressionTree { root, length, depth }
    }

    pub fn root(&self) -> &ExprNode {
        &self.root
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn within_limits(&self, max_length: usize, max_depth: usize) -> bool {
        self.length <= max_length && self.depth <= max_depth
    }

    pub fn evaluate(&self, temp_c: f64, phi_dot: f64) -> f64 {
        self.root.evaluate(temp_c, phi_dot)
    }

    pub fn to_prefix(&self) -> String {
        self.root.to_string()
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_prefix(text).map(ExpressionTree::new)
    }

    pub fn simplify(&self) -> ExpressionTree {
        let mut current = self.root.clone();
        // Bottom-up rewrites can cascade (folding exposes a new identity),
        // so iterate to a fixpoint; each pass strictly shrinks or leaves
        // the tree unchanged, so this terminates quickly.
        for _ in 0..64 {
            let next = simplify_node(&current);
            if next == current {
                break;
            }
            current = next;
        }
        ExpressionTree::new(current)
    }
}

/// Clamp a model output into its bounds: min(hi, max(lo, value)).
pub fn clamp_output(value: f64, bounds: (f64, f64)) -> f64 {
    value.clamp(bounds.0, bounds.1)
}

fn contains_variable(node: &ExprNode) -> bool {
    node.nodes()
        .iter()
        .any(|n| matches!(n, ExprNode::Variable { .. }))
}

fn simplify_node(node: &ExprNode) -> ExprNode {
    use ExprNode::*;
    // Children first.
    let node = match node {
        Add(a, b) => Add(Box::new(simplify_node(a)), Box::new(simplify_node(b))),
        Sub(a, b) => Sub(Box::new(simplify_node(a)), Box::new(simplify_node(b))),
        Mul(a, b) => Mul(Box::new(simplify_node(a)), Box::new(simplify_node(b))),
        ProtDiv(a, b) => ProtDiv(Box::new(simplify_node(a)), Box::new(simplify_node(b))),
        Exp(a) => Exp(Box::new(simplify_node(a))),
        Log(a) => Log(Box::new(simplify_node(a))),
        leaf => leaf.clone(),
    };
    // A subtree without variables evaluates to the same value everywhere;
    // fold it through the protected semantics so the value is unchanged.
    if !node.is_leaf() && !contains_variable(&node) {
        return Constant(node.evaluate(0.0, 1.0));
    }
    match node {
        Add(a, b) => match (*a, *b) {
            (x, Constant(c)) if c == 0.0 => x,
            (Constant(c), x) if c == 0.0 => x,
            (a, b) => Add(Box::new(a), Box::new(b)),
        },
        Sub(a, b) => match (*a, *b) {
            (x, Constant(c)) if c == 0.0 => x,
            (a, b) if a == b => Constant(0.0),
            (a, b) => Sub(Box::new(a), Box::new(b)),
        },
        Mul(a, b) => match (*a, *b) {
            (x, Constant(c)) | (Constant(c), x) if c == 1.0 => x,
            (_, Constant(c)) | (Constant(c), _) if c == 0.0 => Constant(0.0),
            (a, b) => Mul(Box::new(a), Box::new(b)),
        },
        ProtDiv(a, b) => match (*a, *b) {
            (x, Constant(c)) if c == 1.0 => x,
            // x/x is exactly 1 for every input: small divisors trip the
            // protection (which returns 1) and anything else divides to 1.
            (a, b) if a == b => Constant(1.0),
            (a, b) => ProtDiv(Box::new(a), Box::new(b)),
        },
        other => other,
    }
}

fn tokenize(text: &str) -> Vec<String> {
    text.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn parse_prefix(text: &str) -> Result<ExprNode> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let node = parse_expr(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(Error::data(format!(
            "trailing tokens after expression: {:?}",
            &tokens[pos..]
        )));
    }
    Ok(node)
}

fn parse_expr(tokens: &[String], pos: &mut usize) -> Result<ExprNode> {
    let token = tokens
        .get(*pos)
        .ok_or_else(|| Error::data("unexpected end of expression"))?;
    if token != "(" {
        *pos += 1;
        return token
            .parse::<f64>()
            .map(ExprNode::Constant)
            .map_err(|_| Error::data(format!("expected a number, found {token:?}")));
    }
    *pos += 1;
    let op = tokens
        .get(*pos)
        .ok_or_else(|| Error::data("unexpected end after '('"))?
        .clone();
    *pos += 1;
    let node = match op.as_str() {
        "exp" | "log" => {
            let a = parse_expr(tokens, pos)?;
            if op == "exp" {
                ExprNode::Exp(Box::new(a))
            } else {
                ExprNode::Log(Box::new(a))
            }
        }
        "+" | "-" | "*" | "%" => {
            let a = parse_expr(tokens, pos)?;
            // The canonical variable form is (* scale name); fold it back
            // into a single leaf.
            if op == "*" {
                if let Some(next) = tokens.get(*pos) {
                    if let Some(var) = Var::from_name(next) {
                        let scale = match a {
                            ExprNode::Constant(c) => c,
                            _ => {
                                return Err(Error::data(format!(
                                    "variable scale must be a number before {next:?}"
                                )))
                            }
                        };
                        *pos += 1;
                        expect(tokens, pos, ")")?;
                        return Ok(ExprNode::Variable { var, scale });
                    }
                }
            }
            let b = parse_expr(tokens, pos)?;
            match op.as_str() {
                "+" => ExprNode::Add(Box::new(a), Box::new(b)),
                "-" => ExprNode::Sub(Box::new(a), Box::new(b)),
                "*" => ExprNode::Mul(Box::new(a), Box::new(b)),
                _ => ExprNode::ProtDiv(Box::new(a), Box::new(b)),
            }
        }
        other => return Err(Error::data(format!("unknown operator {other:?}"))),
    };
    expect(tokens, pos, ")")?;
    Ok(node)
}

fn expect(tokens: &[String], pos: &mut usize, what: &str) -> Result<()> {
    match tokens.get(*pos) {
        Some(t) if t == what => {
            *pos += 1;
            Ok(())
        }
        other => Err(Error::data(format!("expected {what:?}, found {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(v: Var, scale: f64) -> ExprNode {
        ExprNode::Variable { var: v, scale }
    }

    #[test]
    fn evaluates_sum_with_variable() {
        let tree = ExprNode::Add(Box::new(var(Var::Temp, 1.0)), Box::new(ExprNode::Constant(2.0)));
        assert_eq!(tree.evaluate(3.0, 1.0), 5.0);
    }

    #[test]
    fn protected_division_by_zero_is_one() {
        let tree = ExprNode::ProtDiv(
            Box::new(ExprNode::Constant(1.0)),
            Box::new(ExprNode::Constant(0.0)),
        );
        assert_eq!(tree.evaluate(0.0, 1.0), 1.0);
    }

    #[test]
    fn log_scaled_temperature_formula_both_bases() {
        // -4.35·log(T) + 4.938 at T = 450, natural and base-10 readings.
        let natural = ExprNode::Add(
            Box::new(ExprNode::Mul(
                Box::new(ExprNode::Constant(-4.35)),
                Box::new(ExprNode::Log(Box::new(var(Var::Temp, 1.0)))),
            )),
            Box::new(ExprNode::Constant(4.938)),
        );
        let got = natural.evaluate(450.0, 0.1);
        assert!((got - (-21.637226985024988)).abs() < 1e-12, "{got}");

        // Base 10 via ln(x)/ln(10).
        let base10 = ExprNode::Add(
            Box::new(ExprNode::Mul(
                Box::new(ExprNode::Constant(-4.35)),
                Box::new(ExprNode::ProtDiv(
                    Box::new(ExprNode::Log(Box::new(var(Var::Temp, 1.0)))),
                    Box::new(ExprNode::Constant(std::f64::consts::LN_10)),
                )),
            )),
            Box::new(ExprNode::Constant(4.938)),
        );
        let got = base10.evaluate(450.0, 0.1);
        assert!((got - (-6.603474434922744)).abs() < 1e-12, "{got}");
    }

    #[test]
    fn clamp_output_matches_bounds() {
        assert_eq!(clamp_output(-21.637, (-15.0, 15.0)), -15.0);
        assert_eq!(clamp_output(0.5, (0.0, 1.0)), 0.5);
        assert_eq!(clamp_output(200.0, (0.0, 150.0)), 150.0);
    }

    #[test]
    fn evaluation_is_finite_under_overflow_pressure() {
        let huge = ExprNode::Mul(
            Box::new(ExprNode::Exp(Box::new(ExprNode::Constant(700.0)))),
            Box::new(ExprNode::Exp(Box::new(ExprNode::Constant(700.0)))),
        );
        let v = huge.evaluate(500.0, 10.0);
        assert!(v.is_finite());
        assert_eq!(v, VALUE_CAP);
        let nested = ExprNode::Exp(Box::new(ExprNode::Exp(Box::new(ExprNode::Exp(
            Box::new(var(Var::Temp, 1.0)),
        )))));
        assert!(nested.evaluate(500.0, 10.0).is_finite());
    }

    #[test]
    fn log10_phidot_variable_uses_log10() {
        let tree = var(Var::Log10PhiDot, 2.0);
        assert_eq!(tree.evaluate(0.0, 100.0), 4.0);
        assert_eq!(tree.evaluate(0.0, 0.001), -6.0);
    }

    #[test]
    fn length_and_depth_conventions() {
        let leaf = ExprNode::Constant(1.0);
        assert_eq!(leaf.length(), 1);
        assert_eq!(leaf.depth(), 1);
        let add = ExprNode::Add(Box::new(leaf.clone()), Box::new(var(Var::Temp, 1.0)));
        assert_eq!(add.length(), 3);
        assert_eq!(add.depth(), 2);
        let tree = ExpressionTree::new(ExprNode::Exp(Box::new(add)));
        assert_eq!(tree.length(), 4);
        assert_eq!(tree.depth(), 3);
        assert!(tree.within_limits(4, 3));
        assert!(!tree.within_limits(3, 3));
    }

    #[test]
    fn prefix_round_trip_is_exact() {
        let text = "(+ (* 0.11 T) (* 3.734 phidot))";
        let tree = ExpressionTree::parse(text).unwrap();
        assert_eq!(
            tree.root(),
            &ExprNode::Add(
                Box::new(var(Var::Temp, 0.11)),
                Box::new(var(Var::PhiDot, 3.734)),
            )
        );
        assert_eq!(tree.to_prefix(), text);
    }

    #[test]
    fn constant_times_variable_round_trips_as_nested_product() {
        let tree = ExpressionTree::new(ExprNode::Mul(
            Box::new(ExprNode::Constant(2.0)),
            Box::new(var(Var::Temp, 3.0)),
        ));
        let text = tree.to_prefix();
        assert_eq!(text, "(* 2 (* 3 T))");
        assert_eq!(ExpressionTree::parse(&text).unwrap(), tree);
    }

    #[test]
    fn round_trip_preserves_awkward_floats() {
        let tree = ExpressionTree::new(ExprNode::Sub(
            Box::new(ExprNode::Constant(0.1 + 0.2)),
            Box::new(ExprNode::Log(Box::new(var(Var::Log10PhiDot, -1.5e-7)))),
        ));
        let parsed = ExpressionTree::parse(&tree.to_prefix()).unwrap();
        assert_eq!(parsed, tree);
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(ExpressionTree::parse("(+ 1)").is_err());
        assert!(ExpressionTree::parse("(+ 1 2 3)").is_err());
        assert!(ExpressionTree::parse("(? 1 2)").is_err());
        assert!(ExpressionTree::parse("T").is_err());
        assert!(ExpressionTree::parse("(* T 2)").is_err());
        assert!(ExpressionTree::parse("(+ 1 2) junk").is_err());
    }

    #[test]
    fn simplify_folds_constants_under_a_variable() {
        let tree = ExpressionTree::parse("(* (+ 2 3) (* 1 T))").unwrap();
        assert_eq!(tree.simplify().to_prefix(), "(* 5 (* 1 T))");
    }

    #[test]
    fn simplify_drops_additive_zero() {
        let tree = ExpressionTree::parse("(+ (* 1 T) 0)").unwrap();
        assert_eq!(tree.simplify().to_prefix(), "(* 1 T)");
        let tree = ExpressionTree::parse("(+ 0 (* 1 T))").unwrap();
        assert_eq!(tree.simplify().to_prefix(), "(* 1 T)");
    }

    #[test]
    fn simplify_resolves_self_division_and_subtraction() {
        let tree = ExpressionTree::parse("(% (* 2 T) (* 2 T))").unwrap();
        assert_eq!(tree.simplify().to_prefix(), "1");
        let tree = ExpressionTree::parse("(- (exp (* 1 phidot)) (exp (* 1 phidot)))").unwrap();
        assert_eq!(tree.simplify().to_prefix(), "0");
    }

    #[test]
    fn simplify_keeps_multiplicative_identities() {
        let tree = ExpressionTree::parse("(* (* 1 T) 1)").unwrap();
        assert_eq!(tree.simplify().to_prefix(), "(* 1 T)");
        let tree = ExpressionTree::parse("(% (* 1 T) 1)").unwrap();
        assert_eq!(tree.simplify().to_prefix(), "(* 1 T)");
        let tree = ExpressionTree::parse("(* (* 1 T) 0)").unwrap();
        assert_eq!(tree.simplify().to_prefix(), "0");
    }

    #[test]
    fn simplify_cascades_to_fixpoint() {
        // Folding (- 3 3) to 0 exposes the x + 0 identity.
        let tree = ExpressionTree::parse("(+ (* 1 T) (- 3 3))").unwrap();
        assert_eq!(tree.simplify().to_prefix(), "(* 1 T)");
    }

    #[test]
    fn simplify_agrees_with_original() {
        let texts = [
            "(+ (* 0.11 T) (* 3.734 phidot))",
            "(* (+ 2 3) (exp (* 0.01 T)))",
            "(% (log (* 1 T)) (log (* 1 T)))",
            "(- (* 1e-13 T) 0)",
            "(+ (% (* 2 log10phidot) (- 7 7)) 1)",
        ];
        for text in texts {
            let tree = ExpressionTree::parse(text).unwrap();
            let simplified = tree.simplify();
            for &(t, pd) in &[(350.0, 0.001), (425.0, 0.1), (500.0, 10.0), (20.0, 1.0)] {
                let a = tree.evaluate(t, pd);
                let b = simplified.evaluate(t, pd);
                let scale = a.abs().max(b.abs()).max(1.0);
                assert!((a - b).abs() / scale < 1e-12, "{text} at ({t},{pd}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn with_replaced_swaps_the_indexed_subtree() {
        let tree = ExpressionTree::parse("(+ (* 2 T) (- 1 (* 3 phidot)))").unwrap();
        // Preorder: 0 Add, 1 Var(T), 2 Sub, 3 Const(1), 4 Var(phidot).
        let replaced = tree.root().with_replaced(3, &ExprNode::Constant(9.0));
        assert_eq!(
            ExpressionTree::new(replaced).to_prefix(),
            "(+ (* 2 T) (- 9 (* 3 phidot)))"
        );
        let replaced = tree.root().with_replaced(2, &ExprNode::Constant(9.0));
        assert_eq!(ExpressionTree::new(replaced).to_prefix(), "(+ (* 2 T) 9)");
        let replaced = tree.root().with_replaced(0, &ExprNode::Constant(9.0));
        assert_eq!(ExpressionTree::new(replaced).to_prefix(), "9");
    }

    #[test]
    fn nodes_visits_in_preorder() {
        let tree = ExpressionTree::parse("(+ (* 2 T) 1)").unwrap();
        let nodes = tree.root().nodes();
        assert_eq!(nodes.len(), 3);
        assert!(matches!(nodes[0], ExprNode::Add(_, _)));
        assert!(matches!(nodes[1], ExprNode::Variable { .. }));
        assert!(matches!(nodes[2], ExprNode::Constant(_)));
    }
}
