//! Built-in benchmark systems and generators for the breadth family and
//! random power systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{singular_values, Matrix};
use crate::poly::{variables, Monomial, Point, PolySystem, Polynomial, Variables};
use crate::text::parse_system;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("unknown case `{0}`")]
    Unknown(String),
    #[error("invalid generator arguments: {0}")]
    InvalidArguments(String),
    #[error("no nondegenerate base system after {0} draws")]
    Degenerate(usize),
}

/// Tolerances a case is meant to be run with; `None` means the library
/// default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CaseTolerances {
    pub theta: Option<f64>,
    pub eps: Option<f64>,
    pub rank_guess: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkCase {
    pub name: String,
    #[serde(skip)]
    pub system: PolySystem,
    pub approx_zero: Point,
    /// Known zero, when it is exactly representable.
    pub exact_zero: Option<Vec<f64>>,
    /// Multiplicity of the zero (metadata; `None` when it does not fit).
    pub reference_multiplicity: Option<u64>,
    /// `false` when the multiplicity is only a lower bound.
    pub multiplicity_exact: bool,
    pub expected_final_size: Option<usize>,
    pub expected_new_vars: Option<usize>,
    pub tolerances: CaseTolerances,
    pub notes: String,
}

const NAMES: [&str; 10] = [
    "dz1", "dz2", "sec5_sys3", "sec5_sys4", "ex3", "ex6", "ex8a", "ex8b", "ex10", "breadth5",
];

pub fn list_cases() -> Vec<&'static str> {
    NAMES.to_vec()
}

fn sys(text: &str) -> PolySystem {
    parse_system(text).expect("built-in system parses").system
}

/// Adds a deterministic offset of magnitude in `(0.5e-4, 1e-4]` and random
/// sign to every coordinate.
pub fn perturb(zero: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    zero.iter()
        .map(|&z| {
            let mag: f64 = rng.gen_range(0.5e-4..=1e-4);
            if rng.gen_bool(0.5) {
                z + mag
            } else {
                z - mag
            }
        })
        .collect()
}

struct Spec {
    text: String,
    zero: Option<Vec<f64>>,
    start: Option<Vec<f64>>,
    mult: u64,
    size: Option<usize>,
    alphas: Option<usize>,
    tol: CaseTolerances,
    notes: &'static str,
}

fn spec(name: &str) -> Option<Spec> {
    let base = Spec {
        text: String::new(),
        zero: None,
        start: None,
        mult: 1,
        size: None,
        alphas: None,
        tol: CaseTolerances::default(),
        notes: "",
    };
    let s = match name {
        "dz1" => Spec {
            text: "x1^4 - x2*x3*x4\nx2^4 - x1*x3*x4\nx3^4 - x1*x2*x4\nx4^4 - x1*x2*x3".into(),
            zero: Some(vec![0.0; 4]),
            mult: 131,
            size: Some(4),
            notes: "four quartics with cubic cross terms",
            ..base
        },
        "dz2" => Spec {
            text: "x1^4\nx1^2*x2 + x2^4\nx3 + x3^2 - 7*x1^3 - 8*x1^2".into(),
            zero: Some(vec![0.0, 0.0, -1.0]),
            start: Some(vec![0.00006787, 0.00007577, -0.9999]),
            mult: 16,
            size: Some(3),
            alphas: Some(0),
            tol: CaseTolerances {
                theta: Some(0.005),
                eps: Some(0.005),
                rank_guess: false,
            },
            notes: "deflates to {x1, x2, f3} without new variables",
        },
        "sec5_sys3" => {
            let (r5, r7) = (5f64.sqrt(), 7f64.sqrt());
            Spec {
                text: format!(
                    "14*x + 33*y - {a}*x^2 - {b}*x*y - {b}*y^2 - {c} + x^3 + 6*x^2*y + 12*x*y^2 + 8*y^3 + {r7}\n\
                     41*x - 18*y - {r5} + 8*x^3 - 12*x^2*y + 6*x*y^2 - y^3 + {d}*x*y - {d}*x^2 - {e}*y^2 - {f}",
                    a = 3.0 * r5,
                    b = 12.0 * r5,
                    c = 6.0 * r5,
                    d = 12.0 * r7,
                    e = 3.0 * r7,
                    f = 6.0 * r7,
                ),
                zero: Some(vec![(r5 + 2.0 * r7) / 5.0, (2.0 * r5 - r7) / 5.0]),
                start: Some(vec![1.5055, 0.36528]),
                mult: 5,
                size: Some(3),
                alphas: Some(1),
                notes: "radical coefficients rounded to double precision; the zero is ((sqrt5 + 2 sqrt7)/5, (2 sqrt5 - sqrt7)/5)",
                ..base
            }
        }
        "sec5_sys4" => Spec {
            text: sys4_text(),
            zero: Some(vec![0.0, 0.0, -1.0]),
            mult: 18,
            size: Some(3),
            alphas: Some(0),
            notes: "cubed factors; expanded on load",
            ..base
        },
        "ex3" => Spec {
            text: "x - y + x^2\nx - y + y^2".into(),
            zero: Some(vec![0.0, 0.0]),
            start: Some(vec![0.0006721, 0.0008381]),
            mult: 3,
            size: Some(5),
            alphas: Some(3),
            notes: "two rounds of combination",
            ..base
        },
        "ex6" => Spec {
            text: "-9/4 + 3/2*x1 + 2*x2 + 3*x3 + 4*x4 - 1/4*x1^2\n\
                   x1 - 2*x2 - 2*x3 - 4*x4 + 2*x1*x2 + 3*x1*x3 + 4*x1*x4\n\
                   8 - 4*x1 - 8*x4 + 2*x4^2 + 4*x1*x4 - x1*x4^2\n\
                   -3 + 3*x1 + 2*x2 + 4*x3 + 4*x4"
                .into(),
            zero: Some(vec![1.0, -2.0, -1.0, 2.0]),
            start: Some(vec![1.00004659, -1.99995813, -0.99991547, 2.00005261]),
            mult: 3,
            size: Some(7),
            alphas: Some(3),
            tol: CaseTolerances {
                theta: Some(0.05),
                eps: Some(0.005),
                rank_guess: false,
            },
            notes: "one combination round with three new variables",
        },
        "ex8a" => Spec {
            text: "x + x^2 + 10000*y^2\nx^2 + 10000*y^2".into(),
            zero: Some(vec![0.0, 0.0]),
            start: Some(vec![0.0006851, -0.0004368]),
            mult: 2,
            size: Some(2),
            alphas: Some(0),
            tol: CaseTolerances {
                theta: Some(0.5),
                eps: Some(0.05),
                rank_guess: false,
            },
            notes: "large theta; accurate once refined",
        },
        "ex8b" => Spec {
            text: "x + x^2 + 2*x*y + 10000*y^2\n1/20*x + x^2 + 2*x*y + 10000*y^2".into(),
            zero: Some(vec![0.0, 0.0]),
            start: Some(vec![0.000006851, -0.000004368]),
            mult: 2,
            size: Some(3),
            alphas: Some(1),
            tol: CaseTolerances {
                theta: Some(0.5),
                eps: Some(0.05),
                rank_guess: false,
            },
            notes: "theta 0.5 gives a perturbed system; retried",
        },
        "ex10" => Spec {
            text: "x + x^2 + 2*x*y + 10000*y^2\n1/20*x + x^2 + 2*x*y + 10000*y^2".into(),
            zero: Some(vec![0.0, 0.0]),
            start: Some(vec![0.000006851, -0.000004368]),
            mult: 2,
            size: Some(3),
            alphas: Some(1),
            tol: CaseTolerances {
                theta: None,
                eps: Some(0.05),
                rank_guess: true,
            },
            notes: "rank guessing, no regularity tolerance",
        },
        _ => return None,
    };
    Some(s)
}

fn sys4_text() -> String {
    let vars = variables(&["x1", "x2", "x3"]);
    let over = |t: &str| sys(&format!("vars: x1, x2, x3\n{t}")).polys()[0].clone();
    let f1 = over("2*x1 + 2*x1^2 + 2*x2 + 2*x2^2 + x3^2 - 1");
    let f2 = &over("x1 + x2 - x3 - 1").pow(3) - &over("x1^3");
    let f3 = &over("2*x1^3 + 5*x2^2 + 10*x3 + 5*x3^2 + 5").pow(3) - &over("1000*x1^5");
    let s = PolySystem::new(vec![f1, f2, f3]).expect("nonempty");
    debug_assert_eq!(s.vars(), &vars);
    crate::text::print_system(&s)
}

fn seed_of(name: &str) -> u64 {
    // FNV-1a, stable across platforms and releases
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

pub fn load_case(name: &str) -> Result<BenchmarkCase, CorpusError> {
    if let Some(n) = name.strip_prefix("breadth").and_then(|s| s.parse::<usize>().ok()) {
        return generate_breadth_system(n);
    }
    let s = spec(name).ok_or_else(|| CorpusError::Unknown(name.to_string()))?;
    let system = sys(&s.text);
    let start = match (&s.start, &s.zero) {
        (Some(p), _) => p.clone(),
        (None, Some(z)) => perturb(z, seed_of(name)),
        (None, None) => unreachable!("every case has a zero or a start"),
    };
    Ok(BenchmarkCase {
        name: name.to_string(),
        system,
        approx_zero: Point::new(start).expect("finite start"),
        exact_zero: s.zero,
        reference_multiplicity: Some(s.mult),
        multiplicity_exact: true,
        expected_final_size: s.size,
        expected_new_vars: s.alphas,
        tolerances: s.tol,
        notes: s.notes.to_string(),
    })
}

/// `{x1^3 - x1^2 - x2^2, x_i^3 + x_i^2 - x_{i+1} (1 < i < n), x_n^2}` with
/// its zero at the origin of multiplicity `2^n`.
pub fn generate_breadth_system(n: usize) -> Result<BenchmarkCase, CorpusError> {
    if n < 2 {
        return Err(CorpusError::InvalidArguments(format!("breadth needs n >= 2, got {n}")));
    }
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let vars = variables(&names);
    let x = |i: usize| Polynomial::variable(vars.clone(), i);
    let mut polys = Vec::with_capacity(n);
    polys.push(&(&x(0).pow(3) - &x(0).pow(2)) - &x(1).pow(2));
    for i in 1..n - 1 {
        polys.push(&(&x(i).pow(3) + &x(i).pow(2)) - &x(i + 1));
    }
    polys.push(x(n - 1).pow(2));
    let zero = vec![0.0; n];
    let name = format!("breadth{n}");
    Ok(BenchmarkCase {
        approx_zero: Point::new(perturb(&zero, seed_of(&name))).expect("finite"),
        system: PolySystem::new(polys).expect("nonempty"),
        name,
        exact_zero: Some(zero),
        reference_multiplicity: 2u64.checked_pow(n as u32),
        multiplicity_exact: true,
        expected_final_size: Some(n),
        expected_new_vars: Some(0),
        tolerances: CaseTolerances::default(),
        notes: format!("breadth family, n = {n}"),
    })
}

/// Parameters of a random power system `F_i = f_i^{d_i} + g_i` built on a
/// random base `{f_1, ..., f_n}` with a simple zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSystemSpec {
    pub degrees: Vec<u32>,
    /// `Some((j, e))` sets `g_i = f_j^e`; `None` sets `g_i = 0`.
    pub mix: Vec<Option<(usize, u32)>>,
    /// Total degree of each base polynomial.
    pub base_degree: u32,
    pub seed: u64,
}

impl PowerSystemSpec {
    pub fn unmixed(degrees: Vec<u32>, seed: u64) -> Self {
        let n = degrees.len();
        PowerSystemSpec {
            degrees,
            mix: vec![None; n],
            base_degree: 2,
            seed,
        }
    }
}

const MAX_DRAWS: usize = 100;

fn monomials_up_to(n: usize, deg: u32) -> Vec<Monomial> {
    let mut out = vec![Monomial::one(n)];
    let mut frontier = out.clone();
    for _ in 0..deg {
        let mut next = Vec::new();
        for m in &frontier {
            let last = m.exponents().iter().rposition(|&e| e > 0).unwrap_or(0);
            for i in last..n {
                let mut e = m.exponents().to_vec();
                e[i] += 1;
                next.push(Monomial::new(e));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn random_base(vars: &Variables, p: &[f64], deg: u32, rng: &mut ChaCha8Rng) -> Vec<Polynomial> {
    let n = vars.len();
    let monos = monomials_up_to(n, deg);
    (0..n)
        .map(|_| {
            let terms = monos.iter().filter_map(|m| {
                let c: i32 = rng.gen_range(-3..=3);
                (c != 0).then(|| (m.clone(), c as f64))
            });
            let mut f = Polynomial::from_terms(vars.clone(), terms);
            // make sure the top degree is present, then shift to vanish at p
            if f.total_degree() < deg {
                let mut e = vec![0; n];
                e[0] = deg;
                f = &f + &Polynomial::from_terms(vars.clone(), [(Monomial::new(e), 1.0)]);
            }
            let v = f.evaluate(p).expect("dimension");
            let f = &f - &Polynomial::constant(vars.clone(), v);
            // unit-scale gradient at p; a power of two keeps coefficients exact
            let g = crate::linalg::norm2(&f.gradient(p).expect("dimension"));
            if g > 0.0 {
                f.scale(2f64.powi(-(g.log2().round() as i32)))
            } else {
                f
            }
        })
        .collect()
}

fn well_conditioned(j: &Matrix) -> bool {
    match singular_values(j) {
        Ok(s) => s.last().copied().unwrap_or(0.0) > 0.1,
        Err(_) => false,
    }
}

pub fn generate_random_power_system(spec: &PowerSystemSpec) -> Result<BenchmarkCase, CorpusError> {
    let n = spec.degrees.len();
    if n == 0 || spec.mix.len() != n || spec.degrees.contains(&0) || spec.base_degree == 0 {
        return Err(CorpusError::InvalidArguments(
            "need n >= 1, positive degrees and one mix entry per equation".into(),
        ));
    }
    if spec.mix.iter().flatten().any(|&(j, e)| j >= n || e == 0) {
        return Err(CorpusError::InvalidArguments("mix entry out of range".into()));
    }
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let vars = variables(&names);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1..=1) as f64).collect();
    for _ in 0..MAX_DRAWS {
        let base = random_base(&vars, &p, spec.base_degree, &mut rng);
        let base_sys = PolySystem::new(base.clone()).expect("nonempty");
        if !well_conditioned(&base_sys.jacobian(&p).expect("dimension")) {
            continue;
        }
        let polys: Vec<Polynomial> = (0..n)
            .map(|i| {
                let f = base[i].pow(spec.degrees[i]);
                match spec.mix[i] {
                    Some((j, e)) => &f + &base[j].pow(e),
                    None => f,
                }
            })
            .collect();
        if polys.iter().any(Polynomial::is_zero) {
            continue;
        }
        let mixed = spec.mix.iter().any(Option::is_some);
        let mult = spec.degrees.iter().try_fold(1u64, |a, &d| a.checked_mul(d as u64));
        let name = format!("power{n}_{}", spec.seed);
        return Ok(BenchmarkCase {
            approx_zero: Point::new(perturb(&p, spec.seed ^ seed_of(&name))).expect("finite"),
            system: PolySystem::new(polys).expect("nonempty"),
            name,
            exact_zero: Some(p),
            reference_multiplicity: mult,
            multiplicity_exact: !mixed,
            expected_final_size: None,
            expected_new_vars: None,
            tolerances: CaseTolerances::default(),
            notes: format!("degrees {:?}, mix {:?}", spec.degrees, spec.mix),
        });
    }
    Err(CorpusError::Degenerate(MAX_DRAWS))
}
