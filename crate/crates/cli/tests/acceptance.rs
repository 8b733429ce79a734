//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the report reads top to bottom:
//! detail lines for every measured quantity, then the verdict line of the
//! criterion. A failed criterion is reported, not hidden: the last line
//! names every failure. The exit status is nonzero on failure only when
//! `FRACDUAL_ACCEPTANCE_STRICT` is set, so the rest of the workspace tests
//! still run.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fracdual_cli::commands::{cmd_derivative, cmd_solve, DerivMode, MethodChoice};
use fracdual_cli::fixtures::{fixture, FIXTURES};
use fracdual_cli::problem::ProblemFile;
use fracdual_core::stencils::{stencil, Family, Placement};
use fracdual_core::{
    assemble_residual, caputo_byparts, caputo_power, caputo_substitution, compare_to_exact, dual_solve, gamma,
    AnalyticFunction, DualReport64, EquationSpec64, Expr64, FractionalOrder64, GridFunction64, MethodKind,
    SolverConfig64, TermSpec64, Verdict,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TABLE_ALPHA: f64 = 0.4;
const TABLE_H: f64 = 1e-4;
const TABLE_X: [f64; 6] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
const TABLE_SUBST: [f64; 6] = [0.2824821407, 0.4344599557, 0.5680456557, 0.6996787873, 0.8392328384, 0.9959904642];
const TABLE_BYPARTS: [f64; 6] = [0.2824821402, 0.4344599549, 0.5680456546, 0.6996787858, 0.8392328364, 0.9959904614];
const TABLE_ERR_SUBST: [f64; 6] = [1.5e-8, 3.1e-8, 5.1e-8, 7.5e-8, 1.1e-7, 1.5e-7];
const TABLE_ERR_BYPARTS: [f64; 6] = [1.5e-8, 3.2e-8, 5.2e-8, 7.6e-8, 1.1e-7, 1.5e-7];
const DERIVATIVE_VALUE_TOL: f64 = 5e-8;
const ERROR_FACTOR: f64 = 5.0;
const DERIVATIVE_RUNTIME: Duration = Duration::from_secs(1);

const ORDER_H: [f64; 3] = [4e-4, 2e-4, 1e-4];
const ORDER_ALPHAS: [f64; 3] = [0.4, 0.9, 1.7];
const ORDER_X: f64 = 0.5;
const ORDER_BAND: (f64, f64) = (1.5, 2.5);

const MIXED_BYPARTS: [f64; 10] = [
    -0.0061330982,
    -0.0212821228,
    -0.0431124645,
    -0.0700231242,
    -0.1007208712,
    -0.1341161406,
    -0.1692773586,
    -0.2054041267,
    -0.2418082833,
    -0.2778991084,
];
const MIXED_SUBST: [f64; 10] = [
    -0.0061330846,
    -0.0212821387,
    -0.0431125027,
    -0.0700231812,
    -0.1007209446,
    -0.1341162285,
    -0.1692774592,
    -0.2054042388,
    -0.2418084054,
    -0.2778992392,
];
const SOLUTION_VALUE_TOL: f64 = 1e-5;
const RESIDUAL_BOUND: f64 = 1e-6;

const MANUFACTURED_ERROR_BOUND: f64 = 5e-4;
const INTER_METHOD_BOUND: f64 = 1e-6;

const LINEAR_ERROR_BOUND: f64 = 2e-2;
const SEPARATION_FACTOR: f64 = 10.0;

const SEMILINEAR_ERROR_BOUND: f64 = 5e-4;

const LINEARITY_TOL: f64 = 1e-13;
const GAMMA_RECURRENCE_TOL: f64 = 1e-12;
const ROUND_TRIP_TOL: f64 = 1e-15;

struct Report {
    lines: Vec<String>,
    pass: bool,
}

impl Report {
    fn new() -> Self {
        Report { lines: Vec::new(), pass: true }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("    {} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("    {line}"));
    }
}

fn solve_fixture(name: &str) -> (ProblemFile, DualReport64) {
    let p = fixture(name);
    let r = dual_solve(&p.spec, &p.config(MethodKind::Substitution), p.threshold);
    (p, r)
}

fn exact_error(p: &ProblemFile, r: &DualReport64, m: MethodKind) -> f64 {
    let exact = p.exact.as_ref().expect("fixture with exact solution");
    r.solution(m).and_then(|s| compare_to_exact(s, exact).ok()).map_or(f64::NAN, |e| e.sup)
}

fn sample(r: &DualReport64, m: MethodKind, x: f64) -> f64 {
    r.solution(m).map_or(f64::NAN, |s| s.u.values()[(x / s.u.h()).round() as usize])
}

fn tan_derivative_values(rep: &mut Report) {
    let start = Instant::now();
    let ord = FractionalOrder64::new(TABLE_ALPHA).unwrap();
    let tan = AnalyticFunction::Tan;
    for (i, &x) in TABLE_X.iter().enumerate() {
        let k = (x / TABLE_H).round() as usize;
        let reference = tan.caputo_reference(&ord, x).unwrap();
        for (m, value, err) in [
            (MethodKind::Substitution, TABLE_SUBST[i], TABLE_ERR_SUBST[i]),
            (MethodKind::ByParts, TABLE_BYPARTS[i], TABLE_ERR_BYPARTS[i]),
        ] {
            let v = tan.quadrature(&ord, m, TABLE_H, k).unwrap();
            let dv = (v - value).abs();
            rep.check(dv <= DERIVATIVE_VALUE_TOL, format!("x={x} {m}: {v:.10} vs {value:.10} |diff|={dv:.1e}"));
            let e = (v - reference).abs();
            let within = e >= err / ERROR_FACTOR && e <= err * ERROR_FACTOR;
            rep.check(within, format!("x={x} {m}: error {e:.2e} vs published {err:.1e}"));
        }
    }
    let elapsed = start.elapsed();
    rep.check(elapsed < DERIVATIVE_RUNTIME, format!("runtime {:.3} s", elapsed.as_secs_f64()));
}

fn observed_orders(rep: &mut Report) {
    let functions =
        [("tan", AnalyticFunction::Tan), ("x^1.2", AnalyticFunction::Power(1.2)), ("exp", AnalyticFunction::Exp)];
    for (name, f) in &functions {
        for alpha in ORDER_ALPHAS {
            let ord = FractionalOrder64::new(alpha).unwrap();
            let exact = f.caputo_reference(&ord, ORDER_X).unwrap();
            for m in MethodKind::BOTH {
                let errs: Vec<f64> = ORDER_H
                    .iter()
                    .map(|&h| {
                        let k = (ORDER_X / h).round() as usize;
                        (f.quadrature(&ord, m, h, k).unwrap() - exact).abs()
                    })
                    .collect();
                let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
                let ok = orders.iter().all(|&p| p >= ORDER_BAND.0 && p <= ORDER_BAND.1);
                let shown: Vec<String> = orders.iter().map(|p| format!("{p:.3}")).collect();
                rep.check(
                    ok,
                    format!("{name} alpha={alpha} {m}: orders [{}] errors {:.2e}", shown.join(", "), errs[2]),
                );
            }
        }
    }
}

fn mixed_order_values(rep: &mut Report) {
    let (_, r) = solve_fixture("quasilinear_mixed");
    for (m, table) in [(MethodKind::ByParts, &MIXED_BYPARTS), (MethodKind::Substitution, &MIXED_SUBST)] {
        for (i, &want) in table.iter().enumerate() {
            let x = (i + 1) as f64 / 10.0;
            let got = sample(&r, m, x);
            let d = (got - want).abs();
            rep.check(d <= SOLUTION_VALUE_TOL, format!("x={x} {m}: {got:.10} vs {want:.10} |diff|={d:.1e}"));
        }
        let res = r.solution(m).map_or(f64::NAN, |s| s.residual_sup());
        rep.check(res <= RESIDUAL_BOUND, format!("{m} residual sup {res:.2e}"));
    }
}

fn manufactured_quasilinear(rep: &mut Report) {
    let (p, r) = solve_fixture("quasilinear_manufactured");
    for m in MethodKind::BOTH {
        let e = exact_error(&p, &r, m);
        rep.check(e <= MANUFACTURED_ERROR_BOUND, format!("{m} error sup {e:.3e}"));
    }
    let (a, b) = (r.solution(MethodKind::Substitution).unwrap(), r.solution(MethodKind::ByParts).unwrap());
    let diff = a.u.values().iter().zip(b.u.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    rep.check(diff <= INTER_METHOD_BOUND, format!("inter-method sup difference {diff:.2e}"));
    rep.check(r.verdict == Verdict::Reliable, r.verdict_line());
}

fn linear_classification(rep: &mut Report) {
    let names = ["linear_power", "linear_sqrt", "linear_quarter", "linear_hundredth"];
    let results: Vec<(ProblemFile, DualReport64)> = std::thread::scope(|s| {
        let hs: Vec<_> = names.iter().map(|n| s.spawn(move || solve_fixture(n))).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let errs = |i: usize| {
        let (p, r) = &results[i];
        (exact_error(p, r, MethodKind::Substitution), exact_error(p, r, MethodKind::ByParts))
    };
    for (name, (p, r)) in names.iter().zip(&results) {
        rep.note(format!("{name} h={}: {}", p.h, r.verdict_line()));
    }

    let (es, eb) = errs(0);
    rep.check(results[0].1.verdict == Verdict::Reliable, "linear_power verdict Reliable".into());
    rep.check(es <= LINEAR_ERROR_BOUND && eb <= LINEAR_ERROR_BOUND, format!("linear_power errors {es:.2e} / {eb:.2e}"));

    let r = &results[1].1;
    let dev = r.deviation.unwrap_or(f64::INFINITY);
    rep.check(r.verdict != Verdict::Reliable, "linear_sqrt verdict not Reliable".into());
    rep.check(dev >= SEPARATION_FACTOR * r.threshold, format!("linear_sqrt deviation {dev:.2e} vs 10x threshold"));

    let (es, eb) = errs(2);
    rep.check(results[2].1.verdict != Verdict::Reliable, "linear_quarter verdict not Reliable".into());
    rep.check(
        eb <= LINEAR_ERROR_BOUND && !(es <= LINEAR_ERROR_BOUND),
        format!("linear_quarter by-parts error {eb:.2e} within, substitution {es:.2e} outside"),
    );

    let (es, eb) = errs(3);
    rep.check(results[3].1.verdict != Verdict::Reliable, "linear_hundredth verdict not Reliable".into());
    rep.check(
        es <= LINEAR_ERROR_BOUND && !(eb <= LINEAR_ERROR_BOUND),
        format!("linear_hundredth substitution error {es:.2e} within, by-parts {eb:.2e} outside"),
    );
}

fn semilinear_classification(rep: &mut Report) {
    let names = ["semilinear_unstable", "semilinear_stable", "semilinear_manufactured", "quasilinear_higher"];
    let results: Vec<(ProblemFile, DualReport64)> = std::thread::scope(|s| {
        let hs: Vec<_> = names.iter().map(|n| s.spawn(move || solve_fixture(n))).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let verdict = |i: usize| results[i].1.verdict;
    rep.check(verdict(0) != Verdict::Reliable, format!("semilinear_unstable: {}", results[0].1.verdict_line()));
    rep.check(verdict(1) == Verdict::Reliable, format!("semilinear_stable: {}", results[1].1.verdict_line()));
    rep.check(verdict(2) == Verdict::Reliable, format!("semilinear_manufactured: {}", results[2].1.verdict_line()));
    let (p, r) = &results[2];
    for m in MethodKind::BOTH {
        let e = exact_error(p, r, m);
        rep.check(e <= SEMILINEAR_ERROR_BOUND, format!("semilinear_manufactured {m} error sup {e:.3e}"));
    }
    rep.check(verdict(3) == Verdict::Reliable, format!("quasilinear_higher: {}", results[3].1.verdict_line()));
}

fn property_suites(rep: &mut Report) {
    let mut rng = StdRng::seed_from_u64(0x5eed);

    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let alpha = rng.gen_range(0.05..2.95);
        let ord = FractionalOrder64::new(alpha).unwrap();
        let h = rng.gen_range(0.005..0.05);
        let m = rng.gen_range(2..60);
        let f: Vec<f64> = (0..=m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..=m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let comb: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let grid = |v: &[f64]| GridFunction64::new(h, v.to_vec()).unwrap();
        let k = rng.gen_range(1..=m);
        let (f0, g0) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let s = |v: &[f64]| caputo_substitution(&grid(v), &ord, k).unwrap();
        let bp = |d0: f64, v: &[f64]| caputo_byparts(d0, &grid(v), &ord, k).unwrap();
        for (lhs, x, y) in [(s(&comb), s(&f), s(&g)), (bp(a * f0 + b * g0, &comb), bp(f0, &f), bp(g0, &g))] {
            let scale = 1.0 + (a * x).abs() + (b * y).abs();
            worst = worst.max((lhs - (a * x + b * y)).abs() / scale);
        }
    }
    rep.check(worst <= LINEARITY_TOL, format!("quadrature linearity, worst scaled defect {worst:.1e}"));

    let mut nonzero = 0;
    for c in [1.0, -2.5, 3.7, 1e6] {
        for alpha in [0.3, 0.5, 1.0, 1.4, 1.9, 2.5] {
            let ord = FractionalOrder64::new(alpha).unwrap();
            for m in MethodKind::BOTH {
                for k in [1, 7, 40] {
                    if AnalyticFunction::Const(c).quadrature(&ord, m, 0.01, k).unwrap() != 0.0 {
                        nonzero += 1;
                    }
                }
            }
        }
        for alpha in [0.4, 0.5, 1.6] {
            let du0 = (alpha > 1.0).then_some(0.0);
            let zero = Expr64::parse("0").unwrap();
            let terms = vec![TermSpec64::new(Expr64::parse("1").unwrap(), alpha).unwrap()];
            let eq = EquationSpec64::new(terms, zero.clone(), zero, 0.3, c, du0).unwrap();
            for m in MethodKind::BOTH {
                let cfg = SolverConfig64::new(0.01, m);
                let candidate = GridFunction64::new(0.01, vec![c; 31]).unwrap();
                let r = assemble_residual(&eq, &cfg, &candidate).unwrap();
                nonzero += r.values().iter().filter(|&&v| v != 0.0).count();
            }
        }
        let out = cmd_derivative(&format!("const{c}"), 0.5, 0.01, &[0.1, 0.5], DerivMode::Stencil).unwrap();
        for line in out.data.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            nonzero += [cols[2], cols[4]].iter().filter(|v| v.parse::<f64>().unwrap() != 0.0).count();
        }
    }
    rep.check(nonzero == 0, format!("derivative of constants exactly zero ({nonzero} nonzero results)"));

    let mut worst: f64 = 0.0;
    for alpha in [0.2, 0.5, 0.9, 1.1, 1.5, 1.99, 2.3, 2.8] {
        let ord = FractionalOrder64::new(alpha).unwrap();
        let n = ord.n();
        let n_fact = gamma(n as f64 + 1.0).unwrap();
        for (h, k) in [(0.01, 1), (0.01, 37), (0.003, 300)] {
            let t = k as f64 * h;
            let exact = caputo_power(n as f64, &ord, t).unwrap() / n_fact;
            let ones = GridFunction64::new(h, vec![1.0; k + 1]).unwrap();
            let got = caputo_substitution(&ones, &ord, k).unwrap();
            worst = worst.max(((got - exact) / exact).abs());
        }
    }
    rep.check(worst <= 1e-13, format!("substitution exact on x^n/n!, worst relative error {worst:.1e}"));

    let mut worst: f64 = 0.0;
    for alpha in [0.2, 0.5, 0.9, 1.1, 1.5, 1.99, 2.3, 2.8] {
        let ord = FractionalOrder64::new(alpha).unwrap();
        let n = ord.n();
        for (h, k) in [(0.01, 1), (0.01, 37), (0.003, 300)] {
            let t = k as f64 * h;
            // f = c0 + c1 x + ... + x^n: only the x^n term survives D^alpha.
            let exact = caputo_power(n as f64, &ord, t).unwrap();
            let zeros = GridFunction64::new(h, vec![0.0; k + 1]).unwrap();
            let got = caputo_byparts(gamma(n as f64 + 1.0).unwrap(), &zeros, &ord, k).unwrap();
            worst = worst.max(((got - exact) / exact).abs());
        }
    }
    rep.check(worst <= 1e-13, format!("by-parts exact on degree-n polynomials, worst relative error {worst:.1e}"));

    let mut worst: f64 = 0.0;
    let h = 0.1;
    for family in [Family::First, Family::Second, Family::SecondCompact, Family::Third] {
        for placement in [Placement::Forward, Placement::Central, Placement::Backward] {
            let s = stencil(family, placement);
            let d = s.derivative_order() as i32;
            let x0 = 0.7;
            for deg in 0..(d + s.formal_order as i32) {
                let window: Vec<f64> =
                    (0..s.len()).map(|i| (x0 + (i as f64 - s.anchor as f64) * h).powi(deg)).collect();
                let exact =
                    if deg < d { 0.0 } else { (0..d).map(|j| (deg - j) as f64).product::<f64>() * x0.powi(deg - d) };
                let got = s.apply(&window, h).unwrap();
                worst = worst.max((got - exact).abs() / (1.0 + exact.abs()));
            }
        }
    }
    rep.check(worst <= 1e-9, format!("stencils exact on polynomials of their degree, worst defect {worst:.1e}"));

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(0.1..20.0);
        let g1 = gamma(x + 1.0).unwrap();
        worst = worst.max((g1 - x * gamma(x).unwrap()).abs() / g1);
    }
    rep.check(worst <= GAMMA_RECURRENCE_TOL, format!("gamma recurrence, worst relative defect {worst:.1e}"));

    let mut texts: Vec<String> = Vec::new();
    for (name, _) in FIXTURES {
        let p = fixture(name);
        texts.extend(p.spec.terms().iter().map(|t| t.coeff.to_string()));
        texts.push(p.spec.forcing().to_string());
        texts.push(p.spec.rhs().to_string());
    }
    texts.extend(["-x^-0.5 + 2^3^2/u", "sqrt(abs(sin(x*u))) - exp(-u)/e", "-(1-u)*ln(2+x)"].map(String::from));
    let mut worst: f64 = 0.0;
    for s in &texts {
        let tree = Expr64::parse(s).unwrap();
        let again = Expr64::parse(&tree.to_string()).unwrap();
        for _ in 0..100 {
            let (x, u) = (rng.gen_range(0.01..1.0), rng.gen_range(-1.0..1.0));
            if let (Ok(a), Ok(b)) = (tree.eval(x, u), again.eval(x, u)) {
                worst = worst.max((a - b).abs() / a.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    rep.check(
        worst <= ROUND_TRIP_TOL,
        format!("parser round trip over {} expressions, worst {worst:.1e}", texts.len()),
    );

    let p = fixture("linear_power");
    let runs: Vec<String> = (0..2)
        .flat_map(|_| {
            [
                cmd_solve(&p, MethodChoice::Dual).unwrap().data,
                cmd_derivative("tan", 0.4, 1e-3, &[0.1, 0.2, 0.5], DerivMode::Stencil).unwrap().data,
            ]
        })
        .collect();
    let same = runs[0] == runs[2] && runs[1] == runs[3] && runs.iter().all(|r| !r.contains('\r'));
    rep.check(same, format!("CSV byte-identical across runs ({} + {} bytes)", runs[0].len(), runs[1].len()));

    let mut violations = 0;
    for name in ["linear_power", "linear_sqrt"] {
        let (_, r) = solve_fixture(name);
        let mut seen_reliable = false;
        for e in -14..=2 {
            for mant in [1.0, 2.5, 5.0] {
                let reliable = r.verdict_at(mant * 10f64.powi(e)) == Verdict::Reliable;
                violations += usize::from(seen_reliable && !reliable);
                seen_reliable |= reliable;
            }
        }
    }
    for _ in 0..1000 {
        let dev = rng.gen_range(0.0..1.0);
        let (t1, t2) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let (cs, cb) = (rng.gen_bool(0.8), rng.gen_bool(0.8));
        if Verdict::classify(cs, cb, Some(dev), lo) == Verdict::Reliable
            && Verdict::classify(cs, cb, Some(dev), hi) != Verdict::Reliable
        {
            violations += 1;
        }
    }
    rep.check(violations == 0, format!("verdict monotone in threshold ({violations} violations)"));
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(&mut Report)); 7] = [
        ("tan derivative values and errors", tan_derivative_values),
        ("observed quadrature orders", observed_orders),
        ("mixed-order quasilinear solution values", mixed_order_values),
        ("manufactured quasilinear accuracy and agreement", manufactured_quasilinear),
        ("linear classification at h=0.01", linear_classification),
        ("semilinear classification at h=0.001", semilinear_classification),
        ("property suites", property_suites),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut rep = Report::new();
        run(&mut rep);
        for l in &rep.lines {
            println!("{l}");
        }
        let tag = if rep.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {name} ({:.2} s)", i + 1, start.elapsed().as_secs_f64());
        if !rep.pass {
            failed.push((i + 1).to_string());
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    if failed.is_empty() {
        return ExitCode::SUCCESS;
    }
    println!("FAILED criteria: {}", failed.join(", "));
    if std::env::var_os("FRACDUAL_ACCEPTANCE_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
