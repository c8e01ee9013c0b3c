//! Random well-typed rules over small integer universes, with a direct Rust
//! interpretation used as a brute-force oracle.
//!
//! Every generated rule has up to three parameters `p1..p3`. Each parameter
//! gets one binding conjunct (`p : S` with `|S| <= 6`, or `p = E`), and the
//! construction keeps every bindable value inside `0..=UNIVERSE_MAX`, so the
//! oracle can scan the full cross product of that range.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use bvalid::lang::BType;
use bvalid::{Env, Value};
use rand::seq::SliceRandom;
use rand::Rng;

pub const UNIVERSE_MAX: i64 = 12;
pub const DATA_NAMES: [&str; 3] = ["D!a", "D!b", "D!c"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    const ALL: [Cmp; 6] = [Cmp::Eq, Cmp::Ne, Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge];

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Ne => "/=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }

    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Cmp::Eq => a == b,
            Cmp::Ne => a != b,
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone)]
pub enum IExpr {
    Const(i64),
    /// Variable by binding depth: parameters first, then quantified names.
    Var(usize),
    Add(Box<IExpr>, Box<IExpr>),
    Sub(Box<IExpr>, Box<IExpr>),
    Mul(Box<IExpr>, Box<IExpr>),
    Div(Box<IExpr>, i64),
    Mod(Box<IExpr>, i64),
    Card(Box<SetE>),
    Size(usize),
}

#[derive(Debug, Clone)]
pub enum SetE {
    Ran(usize),
    Dom(usize),
    Interval(IExpr, IExpr),
    Lit(Vec<i64>),
    Union(Box<SetE>, Box<SetE>),
    Inter(Box<SetE>, Box<SetE>),
    Minus(Box<SetE>, Box<SetE>),
    /// `{x | x : over & cond}` where `x` is bound at the current depth.
    Comp(Box<SetE>, Box<PredE>),
}

#[derive(Debug, Clone)]
pub enum PredE {
    True,
    Cmp(Cmp, IExpr, IExpr),
    In(IExpr, SetE),
    NotIn(IExpr, SetE),
    And(Box<PredE>, Box<PredE>),
    Or(Box<PredE>, Box<PredE>),
    Implies(Box<PredE>, Box<PredE>),
    Not(Box<PredE>),
    Exists(SetE, Box<PredE>),
    ForAll(SetE, Box<PredE>),
    /// `(arg : dom(D) => D(arg) cmp rhs)`
    GuardedApp { data: usize, arg: IExpr, cmp: Cmp, rhs: IExpr },
}

pub fn var_name(level: usize, params: usize) -> String {
    if level < params {
        format!("p{}", level + 1)
    } else {
        format!("x{level}")
    }
}

pub struct Printer {
    pub params: usize,
}

impl Printer {
    pub fn expr(&self, e: &IExpr, depth: usize) -> String {
        match e {
            IExpr::Const(c) => c.to_string(),
            IExpr::Var(l) => var_name(*l, self.params),
            IExpr::Add(a, b) => format!("({} + {})", self.expr(a, depth), self.expr(b, depth)),
            IExpr::Sub(a, b) => format!("({} - {})", self.expr(a, depth), self.expr(b, depth)),
            IExpr::Mul(a, b) => format!("({} * {})", self.expr(a, depth), self.expr(b, depth)),
            IExpr::Div(a, c) => format!("({} / {c})", self.expr(a, depth)),
            IExpr::Mod(a, c) => format!("({} mod {c})", self.expr(a, depth)),
            IExpr::Card(s) => format!("card({})", self.set(s, depth)),
            IExpr::Size(d) => format!("size({})", DATA_NAMES[*d]),
        }
    }

    pub fn set(&self, s: &SetE, depth: usize) -> String {
        match s {
            SetE::Ran(d) => format!("ran({})", DATA_NAMES[*d]),
            SetE::Dom(d) => format!("dom({})", DATA_NAMES[*d]),
            SetE::Interval(a, b) => format!("({} .. {})", self.expr(a, depth), self.expr(b, depth)),
            SetE::Lit(xs) => {
                format!("{{{}}}", xs.iter().map(i64::to_string).collect::<Vec<_>>().join(", "))
            }
            SetE::Union(a, b) => format!("({} \\/ {})", self.set(a, depth), self.set(b, depth)),
            SetE::Inter(a, b) => format!("({} /\\ {})", self.set(a, depth), self.set(b, depth)),
            SetE::Minus(a, b) => format!("({} - {})", self.set(a, depth), self.set(b, depth)),
            SetE::Comp(over, cond) => {
                let x = var_name(depth, self.params);
                format!("{{{x} | {x} : {} & {}}}", self.set(over, depth), self.pred(cond, depth + 1))
            }
        }
    }

    pub fn pred(&self, p: &PredE, depth: usize) -> String {
        match p {
            PredE::True => "0 = 0".to_string(),
            PredE::Cmp(c, a, b) => format!("{} {} {}", self.expr(a, depth), c.symbol(), self.expr(b, depth)),
            PredE::In(a, s) => format!("{} : {}", self.expr(a, depth), self.set(s, depth)),
            PredE::NotIn(a, s) => format!("{} /: {}", self.expr(a, depth), self.set(s, depth)),
            PredE::And(a, b) => format!("({} & {})", self.pred(a, depth), self.pred(b, depth)),
            PredE::Or(a, b) => format!("({} or {})", self.pred(a, depth), self.pred(b, depth)),
            PredE::Implies(a, b) => format!("({} => {})", self.pred(a, depth), self.pred(b, depth)),
            PredE::Not(a) => format!("not({})", self.pred(a, depth)),
            PredE::Exists(s, body) => {
                let x = var_name(depth, self.params);
                format!("#{x}.({x} : {} & {})", self.set(s, depth), self.pred(body, depth + 1))
            }
            PredE::ForAll(s, body) => {
                let x = var_name(depth, self.params);
                format!("!{x}.({x} : {} => {})", self.set(s, depth), self.pred(body, depth + 1))
            }
            PredE::GuardedApp { data, arg, cmp, rhs } => {
                let a = self.expr(arg, depth);
                format!(
                    "({a} : dom({d}) => {d}({a}) {} {})",
                    cmp.symbol(),
                    self.expr(rhs, depth),
                    d = DATA_NAMES[*data]
                )
            }
        }
    }
}

/// Direct interpretation over plain Rust integers and ordered sets.
pub struct Oracle<'d> {
    pub data: &'d [Vec<i64>],
}

impl Oracle<'_> {
    pub fn expr(&self, e: &IExpr, vars: &mut Vec<i64>) -> i64 {
        match e {
            IExpr::Const(c) => *c,
            IExpr::Var(l) => vars[*l],
            IExpr::Add(a, b) => self.expr(a, vars) + self.expr(b, vars),
            IExpr::Sub(a, b) => self.expr(a, vars) - self.expr(b, vars),
            IExpr::Mul(a, b) => self.expr(a, vars) * self.expr(b, vars),
            // Truncating division and remainder.
            IExpr::Div(a, c) => self.expr(a, vars) / c,
            IExpr::Mod(a, c) => self.expr(a, vars) % c,
            IExpr::Card(s) => self.set(s, vars).len() as i64,
            IExpr::Size(d) => self.data[*d].len() as i64,
        }
    }

    pub fn set(&self, s: &SetE, vars: &mut Vec<i64>) -> BTreeSet<i64> {
        match s {
            SetE::Ran(d) => self.data[*d].iter().copied().collect(),
            SetE::Dom(d) => (1..=self.data[*d].len() as i64).collect(),
            SetE::Interval(a, b) => (self.expr(a, vars)..=self.expr(b, vars)).collect(),
            SetE::Lit(xs) => xs.iter().copied().collect(),
            SetE::Union(a, b) => self.set(a, vars).union(&self.set(b, vars)).copied().collect(),
            SetE::Inter(a, b) => self.set(a, vars).intersection(&self.set(b, vars)).copied().collect(),
            SetE::Minus(a, b) => self.set(a, vars).difference(&self.set(b, vars)).copied().collect(),
            SetE::Comp(over, cond) => {
                let over = self.set(over, vars);
                over.into_iter()
                    .filter(|x| {
                        vars.push(*x);
                        let keep = self.pred(cond, vars);
                        vars.pop();
                        keep
                    })
                    .collect()
            }
        }
    }

    pub fn pred(&self, p: &PredE, vars: &mut Vec<i64>) -> bool {
        match p {
            PredE::True => true,
            PredE::Cmp(c, a, b) => c.holds(self.expr(a, vars), self.expr(b, vars)),
            PredE::In(a, s) => self.set(s, vars).contains(&self.expr(a, vars)),
            PredE::NotIn(a, s) => !self.set(s, vars).contains(&self.expr(a, vars)),
            PredE::And(a, b) => self.pred(a, vars) && self.pred(b, vars),
            PredE::Or(a, b) => self.pred(a, vars) || self.pred(b, vars),
            PredE::Implies(a, b) => !self.pred(a, vars) || self.pred(b, vars),
            PredE::Not(a) => !self.pred(a, vars),
            PredE::Exists(s, body) => self.set(s, vars).into_iter().any(|x| {
                vars.push(x);
                let r = self.pred(body, vars);
                vars.pop();
                r
            }),
            PredE::ForAll(s, body) => self.set(s, vars).into_iter().all(|x| {
                vars.push(x);
                let r = self.pred(body, vars);
                vars.pop();
                r
            }),
            PredE::GuardedApp { data, arg, cmp, rhs } => {
                let i = self.expr(arg, vars);
                let col = &self.data[*data];
                if i < 1 || i > col.len() as i64 {
                    return true;
                }
                cmp.holds(col[(i - 1) as usize], self.expr(rhs, vars))
            }
        }
    }
}

/// A generated rule: data, binding conjuncts, filters and the expected
/// predicate.
#[derive(Debug, Clone)]
pub struct GenRule {
    pub data: Vec<Vec<i64>>,
    pub params: usize,
    /// All WHERE conjuncts in the order they are printed.
    pub where_: Vec<PredE>,
    pub expected: PredE,
}

impl GenRule {
    pub fn env(&self) -> Env {
        let mut env = Env::new();
        for (name, col) in DATA_NAMES.iter().zip(&self.data) {
            env.bind(*name, Value::sequence(col.iter().map(|&v| Value::Int(v))), BType::seq(BType::Int));
        }
        env
    }

    pub fn where_text(&self) -> String {
        let pr = Printer { params: self.params };
        self.where_.iter().map(|c| pr.pred(c, self.params)).collect::<Vec<_>>().join(" & ")
    }

    pub fn expected_text(&self) -> String {
        Printer { params: self.params }.pred(&self.expected, self.params)
    }

    pub fn param_names(&self) -> Vec<String> {
        (0..self.params).map(|l| var_name(l, self.params)).collect()
    }

    pub fn rule_text(&self, id: &str) -> String {
        let placeholders: Vec<String> = (1..=self.params).map(|k| format!("%{k}")).collect();
        format!(
            "RULE {id}\n  COUNTEREXAMPLE \"{}\"\n  ANY {}\n  WHERE {}\n  EXPECTED {}\n  END\nEND\n",
            placeholders.join(" "),
            self.param_names().join(", "),
            self.where_text(),
            self.expected_text()
        )
    }

    /// Every tuple of the universe satisfying WHERE, in lexicographic order.
    pub fn oracle_satisfiers(&self) -> Vec<Vec<i64>> {
        let oracle = Oracle { data: &self.data };
        let mut out = Vec::new();
        let mut tuple = vec![0; self.params];
        loop {
            let mut vars = tuple.clone();
            if self.where_.iter().all(|c| oracle.pred(c, &mut vars)) {
                out.push(tuple.clone());
            }
            // Odometer increment, last position fastest.
            let mut i = self.params;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if tuple[i] < UNIVERSE_MAX {
                    tuple[i] += 1;
                    break;
                }
                tuple[i] = 0;
            }
        }
    }

    /// Satisfiers of WHERE that falsify EXPECTED.
    pub fn oracle_findings(&self) -> Vec<Vec<i64>> {
        let oracle = Oracle { data: &self.data };
        self.oracle_satisfiers()
            .into_iter()
            .filter(|t| !oracle.pred(&self.expected, &mut t.clone()))
            .collect()
    }
}

pub struct Gen<'r, R: Rng> {
    pub rng: &'r mut R,
    pub params: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn small(&mut self) -> i64 {
        self.rng.gen_range(0..=8)
    }

    /// An integer expression over variables below `depth`.
    pub fn iexpr(&mut self, depth: usize, size: u32) -> IExpr {
        let leaf = size == 0 || self.rng.gen_bool(0.4);
        if leaf {
            return if depth > 0 && self.rng.gen_bool(0.6) {
                IExpr::Var(self.rng.gen_range(0..depth))
            } else {
                IExpr::Const(self.small())
            };
        }
        let sub = |g: &mut Self| Box::new(g.iexpr(depth, size - 1));
        match self.rng.gen_range(0..8) {
            0 | 1 => IExpr::Add(sub(self), sub(self)),
            2 => IExpr::Sub(sub(self), sub(self)),
            3 => IExpr::Mul(sub(self), Box::new(IExpr::Const(self.rng.gen_range(0..=2)))),
            4 => IExpr::Div(sub(self), self.rng.gen_range(1..=3)),
            5 => IExpr::Mod(sub(self), self.rng.gen_range(1..=3)),
            6 => IExpr::Card(Box::new(self.set(depth, size - 1))),
            _ => IExpr::Size(self.rng.gen_range(0..3)),
        }
    }

    /// An arbitrary set expression (possibly large or empty).
    pub fn set(&mut self, depth: usize, size: u32) -> SetE {
        if size == 0 || self.rng.gen_bool(0.35) {
            return self.small_set(depth, false);
        }
        let sub = |g: &mut Self| Box::new(g.set(depth, size - 1));
        match self.rng.gen_range(0..5) {
            0 => SetE::Union(sub(self), sub(self)),
            1 => SetE::Inter(sub(self), sub(self)),
            2 => SetE::Minus(sub(self), sub(self)),
            3 => SetE::Comp(sub(self), Box::new(self.pred(depth + 1, size - 1))),
            _ => SetE::Interval(self.iexpr(depth, 1), self.iexpr(depth, 1)),
        }
    }

    /// A set of at most six elements, all in `0..=8` unless `dependent`
    /// allows an interval starting at an earlier parameter.
    pub fn small_set(&mut self, depth: usize, dependent: bool) -> SetE {
        let choice = self.rng.gen_range(0..if dependent && depth > 0 { 6 } else { 5 });
        match choice {
            0 => SetE::Ran(self.rng.gen_range(0..3)),
            1 => SetE::Dom(self.rng.gen_range(0..3)),
            2 => {
                let lo = self.small();
                let w = self.rng.gen_range(-1..=5);
                SetE::Interval(IExpr::Const(lo), IExpr::Const((lo + w).min(8)))
            }
            3 => {
                let n = self.rng.gen_range(0..=6);
                SetE::Lit((0..n).map(|_| self.small()).collect())
            }
            4 => {
                let over = SetE::Ran(self.rng.gen_range(0..3));
                let cond = PredE::Cmp(
                    *Cmp::ALL.choose(self.rng).unwrap(),
                    IExpr::Var(depth),
                    IExpr::Const(self.small()),
                );
                SetE::Comp(Box::new(over), Box::new(cond))
            }
            _ => {
                let v = IExpr::Var(self.rng.gen_range(0..depth));
                let w = self.rng.gen_range(0..=3);
                SetE::Interval(v.clone(), IExpr::Add(Box::new(v), Box::new(IExpr::Const(w))))
            }
        }
    }

    pub fn pred(&mut self, depth: usize, size: u32) -> PredE {
        if size == 0 || self.rng.gen_bool(0.3) {
            return match self.rng.gen_range(0..5) {
                0 | 1 => PredE::Cmp(*Cmp::ALL.choose(self.rng).unwrap(), self.iexpr(depth, 1), self.iexpr(depth, 1)),
                2 => PredE::In(self.iexpr(depth, 1), self.small_set(depth, false)),
                3 => PredE::NotIn(self.iexpr(depth, 1), self.small_set(depth, false)),
                _ => PredE::GuardedApp {
                    data: self.rng.gen_range(0..3),
                    arg: self.iexpr(depth, 1),
                    cmp: *Cmp::ALL.choose(self.rng).unwrap(),
                    rhs: self.iexpr(depth, 1),
                },
            };
        }
        let sub = |g: &mut Self| Box::new(g.pred(depth, size - 1));
        match self.rng.gen_range(0..8) {
            0 | 1 => PredE::And(sub(self), sub(self)),
            2 => PredE::Or(sub(self), sub(self)),
            3 => PredE::Implies(sub(self), sub(self)),
            4 => PredE::Not(sub(self)),
            5 => PredE::Exists(self.set(depth, size - 1), Box::new(self.pred(depth + 1, size - 1))),
            6 => PredE::ForAll(self.set(depth, size - 1), Box::new(self.pred(depth + 1, size - 1))),
            _ => PredE::In(self.iexpr(depth, size - 1), self.set(depth, size - 1)),
        }
    }

    /// The conjunct that binds parameter `j`; `indep` lists parameters whose
    /// values are known to lie in `0..=8`.
    fn binder(&mut self, j: usize, indep: &[usize]) -> PredE {
        let var = IExpr::Var(j);
        let earlier: Vec<usize> = indep.iter().copied().filter(|&i| i != j).collect();
        match self.rng.gen_range(0..10) {
            0..=6 => PredE::In(var, self.small_set(self.params, false)),
            7 if !earlier.is_empty() => {
                let i = *earlier.choose(self.rng).unwrap();
                let w = self.rng.gen_range(0..=3);
                let lo = IExpr::Var(i);
                PredE::In(var, SetE::Interval(lo.clone(), IExpr::Add(Box::new(lo), Box::new(IExpr::Const(w)))))
            }
            8 if !earlier.is_empty() => {
                let i = *earlier.choose(self.rng).unwrap();
                PredE::Cmp(Cmp::Eq, var, IExpr::Add(Box::new(IExpr::Var(i)), Box::new(IExpr::Const(self.rng.gen_range(0..=3)))))
            }
            _ => PredE::Cmp(Cmp::Eq, var, IExpr::Card(Box::new(self.small_set(self.params, false)))),
        }
    }
}

/// Generates a random rule with 1..=3 parameters.
pub fn gen_rule<R: Rng>(rng: &mut R) -> GenRule {
    let params = rng.gen_range(1..=3);
    let data: Vec<Vec<i64>> =
        (0..3).map(|_| (0..rng.gen_range(0..=6)).map(|_| rng.gen_range(0..=8)).collect()).collect();
    let mut g = Gen { rng, params };

    // Parameters bound first only depend on constants; later ones may depend
    // on the earlier independent ones (values stay within 0..=11).
    let n_indep = g.rng.gen_range(1..=params);
    let indep: Vec<usize> = (0..n_indep).collect();
    let mut where_ = Vec::new();
    for j in 0..params {
        let binder = if j < n_indep { g.binder(j, &[]) } else { g.binder(j, &indep) };
        where_.push(binder);
    }
    for _ in 0..g.rng.gen_range(0..=2) {
        let size = g.rng.gen_range(0..=2);
        where_.push(g.pred(params, size));
    }
    where_.shuffle(g.rng);
    let size = g.rng.gen_range(0..=3);
    let expected = g.pred(params, size);
    GenRule { data, params, where_, expected }
}

/// Writes `files` (relative path, contents) under `dir`.
pub fn write_files(dir: &Path, files: &[(&str, String)]) {
    for (rel, text) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(path, text).unwrap();
    }
}

/// Parses the machine rendering of an integer witness.
pub fn witness_ints(values: &[bvalid::rules::WitnessParam]) -> Vec<i64> {
    values.iter().map(|w| w.value.parse().expect("integer witness")).collect()
}

/// Parses, prepares and checks a generated rule with no findings cap.
pub fn check_gen_rule(rule: &GenRule) -> (bvalid::rules::Rule, bvalid::rules::RuleResult) {
    use bvalid::rules::{check_rule, expand_defs, parse_rule_file, prepare_rule, RunOptions};
    let env = rule.env();
    let text = rule.rule_text("R");
    let (defs, rules) = parse_rule_file(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    let mut rules = expand_defs(&defs, rules, env.types()).unwrap_or_else(|e| panic!("{e}\n{text}"));
    let mut r = rules.remove(0);
    prepare_rule(&mut r, &env).unwrap_or_else(|e| panic!("{e}\n{text}"));
    let opts = RunOptions { max_findings: usize::MAX, ..RunOptions::default() };
    let result = check_rule(&r, &env, opts);
    (r, result)
}

/// Lays out a project (`project.conf`, `data.decl`, `checks.rules` and the
/// given files under `data/`) and loads its configuration.
pub fn write_project(
    dir: &Path,
    decls: &str,
    rules: &str,
    data: &[(&str, String)],
) -> bvalid::project::ProjectConfig {
    let conf = "[input]\ndata_dir = data\ndeclarations = data.decl\nrules = checks.rules\n\n\
                [output]\ndir = out\nformats = text, csv, json\n";
    let mut files = vec![
        ("project.conf", conf.to_string()),
        ("data.decl", decls.to_string()),
        ("checks.rules", rules.to_string()),
    ];
    let data: Vec<(String, String)> = data.iter().map(|(n, t)| (format!("data/{n}"), t.clone())).collect();
    files.extend(data.iter().map(|(n, t)| (n.as_str(), t.clone())));
    write_files(dir, &files);
    bvalid::project::load_project(&dir.join("project.conf")).unwrap()
}

/// Data records of a CSV report (comment lines and header skipped).
pub fn csv_report_rows(bytes: &[u8]) -> Vec<Vec<String>> {
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::ReaderBuilder::new().delimiter(b';').from_reader(body.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}
