//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines are always printed.

mod common;

use common::{form, iv, random_form, random_stable_filter, spectral_radius, transf2, ExactOracle};
use paa_core::fixpoint::FILTER_OUTPUT;
use paa_core::order::meet_mlb_tol;
use paa_core::{
    eval_abstract, eval_concrete, in_cone, iterate_scheme, join_mub, leq, running_bounds, stability_order,
    widen_nabla, AbstractEnv, AffineForm, Expr, InputMode, Interval, IterationReport, JoinOp, Lifted,
    NoiseAssignment, Program, SchemeConfig, Selection, Status, Stmt, Symbol, SymbolContext, Target, DEFAULT_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Suite {
    failed: Vec<String>,
}

impl Suite {
    fn check(&mut self, id: &str, name: &str, ok: bool, detail: String) {
        println!("{} criterion {id:<4} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(format!("{id} {name}"));
        }
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn analyze(cycle: usize, join: JoinOp, mode: InputMode) -> IterationReport {
    let spec = transf2(mode);
    let cfg = SchemeConfig::new(0, cycle, join);
    iterate_scheme(&Target::Filter(&spec), &cfg).unwrap()
}

fn criterion_1(s: &mut Suite) {
    let t = running_bounds(&transf2(InputMode::Independent), 99, 0);
    let last = t.rows.last().unwrap();
    let exact = ExactOracle::transf2(99, false).at(99);
    let ok = last.k == 99
        && close(last.lo, -1.0907188500, 1e-6)
        && close(last.hi, 2.7573854753, 1e-6)
        && close(last.lo, exact.0, 1e-12)
        && close(last.hi, exact.1, 1e-12);
    s.check("1", "oracle asymptotics", ok, format!("x99 in [{:.10}, {:.10}], rational oracle [{:.10}, {:.10}]", last.lo, last.hi, exact.0, exact.1));
}

fn criterion_2(s: &mut Suite) {
    // The first computed output x2 is left out of the extrema.
    let t = running_bounds(&transf2(InputMode::Independent), 50, 1);
    let (max, kmax) = t.max().unwrap();
    let (min, kmin) = t.min().unwrap();
    let ((emin, ekmin), (emax, ekmax)) = ExactOracle::transf2(50, false).extrema(3);
    let ok = close(max, 2.82431841, 1e-6)
        && kmax == 8
        && close(min, -1.12124069, 1e-6)
        && kmin == 13
        && close(max, emax, 1e-12)
        && close(min, emin, 1e-12)
        && (ekmax, ekmin) == (8, 13);
    s.check("2", "oracle extrema", ok, format!("max {max:.10} at k={kmax}, min {min:.10} at k={kmin}"));
}

fn criterion_3(s: &mut Suite) {
    let r = analyze(5, JoinOp::Nabla, InputMode::Independent);
    let f = r.form(FILTER_OUTPUT).unwrap();
    let g = r.gamma(FILTER_OUTPUT).unwrap();
    let ok = r.status == Status::Fixpoint
        && close(f.center(), 0.8333, 2e-3)
        && close(f.beta(), 2.4661, 2e-3)
        && f.coeffs().is_empty()
        && close(g.lo, -1.6328, 2e-3)
        && close(g.hi, 3.2995, 2e-3);
    s.check("3", "analyzer (0,5,nabla)", ok, format!("{f}, gamma [{:.6}, {:.6}], {} iterations", g.lo, g.hi, r.iterations));
}

fn criterion_4_5(s: &mut Suite) {
    let r = analyze(16, JoinOp::Nabla, InputMode::Independent);
    let g = r.gamma(FILTER_OUTPUT).unwrap();
    let ok = r.status == Status::Fixpoint
        && close(g.lo, -1.3, 2e-3)
        && close(g.hi, 2.8244, 2e-3)
        && r.iterations.abs_diff(18) <= 3;
    s.check("4", "analyzer (0,16,nabla)", ok, format!("gamma [{:.6}, {:.6}], fixpoint after {} iterations", g.lo, g.hi, r.iterations));

    let oracle = ExactOracle::transf2(150, false);
    let ((lo_all, _), (hi_all, _)) = oracle.extrema(0);
    let ((lo_cal, _), (hi_cal, _)) = oracle.extrema(3);
    let full = Interval { lo: lo_all, hi: hi_all };
    let calibrated = Interval { lo: lo_cal, hi: hi_cal };
    let ok = full.subset_of(&g) && calibrated.subset_of(&g);
    s.check(
        "5",
        "soundness gate",
        ok,
        format!(
            "gamma [{:.12}, {:.12}] contains oracle envelopes [{:.12}, {:.12}] and [{:.12}, {:.12}]",
            g.lo, g.hi, full.lo, full.hi, calibrated.lo, calibrated.hi
        ),
    );
}

fn criterion_6(s: &mut Suite) {
    let p = Program {
        decls: vec!["x".into()],
        body: vec![
            Stmt::input("x", iv(-1.0, 1.0)),
            Stmt::WhileTrue(Box::new(Stmt::assign("x", Expr::sub(Expr::var("x"), Expr::scale(0.75, Expr::var("x")))))),
        ],
    };
    let r = iterate_scheme(&Target::Program(&p), &SchemeConfig::new(0, 1, JoinOp::Nabla)).unwrap();
    let step = |i: usize| r.trace[i].values["x"].form().unwrap().clone();
    let ok1 = step(1).approx_eq(&form(0.0, &[(1, 0.25)], 0.75), 1e-12);
    let ok2 = step(2).approx_eq(&form(0.0, &[(1, 1.0 / 16.0)], 15.0 / 16.0), 1e-12);
    let g = r.gamma("x").unwrap();
    let ok = ok1 && ok2 && r.status == Status::Fixpoint && g.approx_eq(&iv(-1.0, 1.0), 1e-6);
    s.check("6", "shift example", ok, format!("x1 = {}, x2 = {}, limit gamma [{:.9}, {:.9}]", step(1), step(2), g.lo, g.hi));
}

fn criterion_7(s: &mut Suite) {
    let (q, m) = stability_order(&[-0.7, 1.4], 64).unwrap();
    let want = [[-0.5488, 0.2156], [-0.15092, -0.24696]];
    let entries_ok = (0..2).all(|i| (0..2).all(|j| close(m.get(i, j), want[i][j], 1e-6)));
    s.check("7", "stability order", q == 5 && entries_ok, format!("q = {q}, A^q = {:?}", m.rows()));
}

fn criterion_8(s: &mut Suite) {
    let w5 = analyze(5, JoinOp::WidenW { after: 1 }, InputMode::Independent);
    let w16 = analyze(16, JoinOp::WidenW { after: 1 }, InputMode::Independent);
    let g5 = w5.gamma(FILTER_OUTPUT).unwrap();
    let g16 = w16.gamma(FILTER_OUTPUT).unwrap();
    let gamma_ok = g5.approx_eq(&iv(-1.6328, 3.2995), 5e-3) && g16.approx_eq(&iv(-1.3, 2.8244), 5e-3);
    let count_ok = w5.iterations.abs_diff(9) <= 2 && w16.iterations.abs_diff(4) <= 2;
    let ok = gamma_ok && count_ok && w5.status == Status::Fixpoint && w16.status == Status::Fixpoint;
    s.check(
        "8",
        "W widening",
        ok,
        format!(
            "c=5: {} iterations, gamma [{:.5}, {:.5}]; c=16: {} iterations, gamma [{:.5}, {:.5}]",
            w5.iterations, g5.lo, g5.hi, w16.iterations, g16.lo, g16.hi
        ),
    );
}

fn criterion_9(s: &mut Suite) {
    let r = analyze(16, JoinOp::Nabla, InputMode::Constant);
    let g = r.gamma(FILTER_OUTPUT).unwrap();
    let ok = r.status == Status::Fixpoint && g.approx_eq(&iv(-0.1008, 2.3298), 2e-3);
    s.check("9", "constant-unknown inputs", ok, format!("gamma [{:.6}, {:.6}]", g.lo, g.hi));
}

fn criterion_10(s: &mut Suite) {
    let u0 = join_mub(&form(0.0, &[(1, 1.0)], 0.0), &form(0.0, &[], 2.0)).form.is_none();
    let u1 = join_mub(&form(1.0, &[(1, 1.0)], 0.0), &form(0.0, &[(1, 2.0)], 0.0)).form == Some(form(0.0, &[(1, 1.0)], 1.0));
    let u2 = join_mub(&form(1.0, &[(1, 1.0)], 0.0), &form(0.0, &[(1, 4.0)], 0.0)).form == Some(form(0.0, &[(1, 2.0)], 2.0));
    let u3 = join_mub(&form(3.0, &[(1, 1.0), (2, 2.0)], 0.0), &form(1.0, &[(1, -2.0), (2, 1.0)], 0.0)).form
        == Some(form(2.0, &[(2, 1.0)], 3.0));
    let x = form(1.0, &[(1, 2.0), (2, -1.0), (3, 2.0)], 0.0);
    let y = form(0.0, &[(1, 1.0), (2, 1.0), (3, 1.0)], 0.0);
    let z = form(5.0, &[(1, 1.0), (2, -2.0)], 0.0);
    let j = |a: &AffineForm, b: &AffineForm| join_mub(a, b).form.unwrap();
    let b1 = j(&j(&y, &z), &x).beta();
    let b2 = j(&j(&x, &z), &y).beta();
    let ok = u0 && u1 && u2 && u3 && b1 == 5.0 && b2 == 4.5;
    s.check("10", "join unit suite", ok, format!("ex_u_0..3: {u0} {u1} {u2} {u3}; grouped betas {b1} and {b2}"));
}

/// `y - x` componentwise, perturbations included (`β` may go negative).
fn vector_diff(y: &AffineForm, x: &AffineForm) -> AffineForm {
    let keys: std::collections::BTreeSet<Symbol> = x.coeffs().keys().chain(y.coeffs().keys()).copied().collect();
    AffineForm::new(
        y.center() - x.center(),
        keys.into_iter().map(|k| (k, y.coeff(k) - x.coeff(k))),
        y.beta() - x.beta(),
    )
}

fn vector_sum(x: &AffineForm, y: &AffineForm) -> AffineForm {
    x.add(y)
}

fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    let vars = ["x", "y", "z"];
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.8) {
            Expr::var(vars[rng.gen_range(0..3)])
        } else {
            Expr::Const(rng.gen_range(-3.0..3.0))
        };
    }
    let a = random_expr(rng, depth - 1);
    let b = random_expr(rng, depth - 1);
    match rng.gen_range(0..4) {
        0 => Expr::add(a, b),
        1 => Expr::sub(a, b),
        2 => Expr::mul(a, b),
        _ => Expr::scale(rng.gen_range(-2.0..2.0), a),
    }
}

fn assignment<R: Rng>(rng: &mut R, nsym: u32, vars: &[&str]) -> NoiseAssignment {
    NoiseAssignment {
        noise: (1..=nsym + 64).map(|i| (Symbol(i), rng.gen_range(-1.0..=1.0))).collect(),
        perturbation: vars.iter().map(|v| (v.to_string(), rng.gen_range(-1.0..=1.0))).collect(),
    }
}

/// Soundness of each arithmetic operation and of random expressions.
fn arithmetic_soundness(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let mut violations = 0;
    let mut samples = 0;
    let vars = ["x", "y", "z"];
    let ops: Vec<Expr> = vec![
        Expr::add(Expr::var("x"), Expr::var("y")),
        Expr::sub(Expr::var("x"), Expr::var("y")),
        Expr::mul(Expr::var("x"), Expr::var("y")),
    ];
    for round in 0..4 {
        for _ in 0..10_000 {
            let forms: Vec<AffineForm> = (0..3).map(|_| random_form(rng, 4, true)).collect();
            let env: std::collections::BTreeMap<String, AffineForm> =
                vars.iter().map(|v| v.to_string()).zip(forms.iter().cloned()).collect();
            let aenv: AbstractEnv = env.iter().map(|(k, v)| (k.clone(), Lifted::Value(v.clone()))).collect();
            let e = if round < 3 { ops[round].clone() } else { random_expr(rng, 3) };
            let mut ctx = SymbolContext::after(Symbol(4));
            let out = eval_abstract(&e, &aenv, &mut ctx).unwrap();
            let g = out.form().unwrap().gamma().unwrap();
            let nu = assignment(rng, 4, &vars);
            let v = eval_concrete(&e, &env, &nu).unwrap();
            samples += 1;
            if !g.contains_within(v, 1e-9 * (1.0 + v.abs())) {
                violations += 1;
            }
        }
    }
    (samples, violations)
}

fn order_axioms(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let mut bad = 0;
    let n = 1000;
    for _ in 0..n {
        let x = random_form(rng, 4, true);
        let cone = |rng: &mut ChaCha8Rng| {
            let p = random_form(rng, 4, false);
            let extra = rng.gen_range(0.0..1.0);
            AffineForm::new(p.center(), p.coeffs().clone(), p.norm_a() + extra)
        };
        let y = vector_sum(&x, &cone(rng));
        let z = vector_sum(&y, &cone(rng));
        let r = random_form(rng, 4, true);
        let reflexive = leq(&x, &x);
        let chain = leq(&x, &y) && leq(&y, &z) && leq(&x, &z);
        let antisym = !(leq(&x, &r) && leq(&r, &x)) || x.approx_eq(&r, DEFAULT_TOL);
        let cone_eq = [(&x, &y), (&x, &r), (&r, &z)]
            .iter()
            .all(|(a, b)| leq(a, b) == in_cone(&vector_diff(b, a)));
        let monotone = !leq(&x, &r) || x.gamma().unwrap().subset_within(&r.gamma().unwrap(), 1e-9);
        if !(reflexive && chain && antisym && cone_eq && monotone) {
            bad += 1;
        }
    }
    (n, bad)
}

fn spectral_identity(rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    let mut tested = 0;
    let mut bad = 0;
    let mut drawn = 0;
    while tested < 1000 {
        drawn += 1;
        let x = random_form(rng, 3, true);
        let signs: Vec<f64> = (1..=3).map(|i| x.coeff(Symbol(i)).signum()).collect();
        let center = rng.gen_range(-5.0..5.0);
        let coeffs: Vec<(Symbol, f64)> =
            (1..=3).map(|i| (Symbol(i), signs[i as usize - 1] * rng.gen_range(0.0..3.0))).collect();
        let y = AffineForm::new(center, coeffs, rng.gen_range(0.0..2.0));
        let join = join_mub(&x, &y);
        let meet = meet_mlb_tol(&x, &y, DEFAULT_TOL);
        if join.selection != Some(Selection::GenericUnique) || meet.selection != Some(Selection::GenericUnique) {
            continue;
        }
        tested += 1;
        let lhs = join.form.unwrap().add(&meet.form.unwrap());
        if !lhs.approx_eq(&vector_sum(&x, &y), DEFAULT_TOL) {
            bad += 1;
        }
    }
    (tested, bad, drawn)
}

fn nabla_associativity(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let mut bad = 0;
    for _ in 0..1000 {
        let (x, y, z) = (random_form(rng, 4, true), random_form(rng, 4, true), random_form(rng, 4, true));
        let l = widen_nabla(&widen_nabla(&x, &y), &z);
        let r = widen_nabla(&x, &widen_nabla(&y, &z));
        if !l.approx_eq(&r, DEFAULT_TOL) {
            bad += 1;
        }
    }
    (1000, bad)
}

fn random_filters(rng: &mut ChaCha8Rng) -> (usize, usize, String) {
    let mut bad = 0;
    let mut worst = String::new();
    for i in 0..100 {
        let n = 1 + i % 4;
        let spec = random_stable_filter(rng, n, 0.9);
        let rho = spectral_radius(&spec);
        let q = match stability_order(spec.a(), 500) {
            Ok((q, _)) => q,
            Err(e) => {
                bad += 1;
                worst = format!("filter {i}: {e}");
                continue;
            }
        };
        let mut cfg = SchemeConfig::new(0, q, JoinOp::Nabla);
        cfg.max_iter = 20_000;
        let r = iterate_scheme(&paa_core::Target::Filter(&spec), &cfg).unwrap();
        let env = running_bounds(&spec, 400, 0).envelope().unwrap();
        let g = r.gamma(FILTER_OUTPUT);
        let ok = rho < 1.0
            && r.status == Status::Fixpoint
            && g.map(|g| g.is_finite() && env.subset_of(&g)).unwrap_or(false);
        if !ok {
            bad += 1;
            worst = format!("filter {i} (order {n}, q {q}): status {:?}, gamma {:?}, envelope {env}", r.status, g);
        }
    }
    (100, bad, worst)
}

fn criterion_11(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (n, v) = arithmetic_soundness(&mut rng);
    s.check("11a", "arithmetic soundness", v == 0, format!("{v} violations in {n} samples"));
    let (n, v) = order_axioms(&mut rng);
    s.check("11b", "order axioms and cone equivalence", v == 0, format!("{v} failures in {n} cases"));
    let (n, v, drawn) = spectral_identity(&mut rng);
    s.check("11c", "spectral identity", v == 0, format!("{v} failures in {n} pairs ({drawn} drawn)"));
    let (n, v) = nabla_associativity(&mut rng);
    s.check("11d", "nabla associativity", v == 0, format!("{v} failures in {n} triples"));
    let (n, v, worst) = random_filters(&mut rng);
    s.check("11e", "random stable filters", v == 0, format!("{v} failures in {n} filters {worst}"));
}

fn main() {
    let mut s = Suite { failed: Vec::new() };
    let all: [fn(&mut Suite); 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
    ];
    for run in all {
        let t = std::time::Instant::now();
        run(&mut s);
        if std::env::var_os("ACCEPTANCE_TIMING").is_some() {
            println!("     ({:.2?})", t.elapsed());
        }
    }
    if s.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failing: {}", s.failed.len(), s.failed.join(", "));
        std::process::exit(1);
    }
}
