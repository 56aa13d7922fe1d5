//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints its own pass/fail line; exits nonzero if any criterion fails.

use std::process::Command as Process;
use std::time::{Duration, Instant};

use odba::bae::{
    a_bar, d_bar, eval_tq_lambda, inhomogeneous_term, solve_bae, spectrum_match, Branch, BetheRootSet, MPolicy,
    SolveOptions, Strategy, TQContext,
};
use odba::lattice::{hamiltonian, transfer_matrix, HamiltonianMode};
use odba::linalg::hermitian_eigenvalues;
use odba::spectral::{
    determinant_factors, functional_seeds, homogeneous_condition_residuals, lambda_from_oracle, lambda_properties,
    oracle_coverage, solve_lambda_functional, DeterminantMode, FunctionalMode,
};
use odba::tensor::{c, cr};
use odba::verify::{
    bb_vanishing_ratios, operator_functional_residuals, sample_points, transfer_asymptotic_richardson,
    verify_catalog, verify_identity, Identity,
};
use odba::{ModelParams, C64};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn within(t: Instant, limit: u64) -> bool {
    t.elapsed() <= Duration::from_secs(limit)
}

fn identity_suite() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for n in 1..=3 {
        for s in 0..10u64 {
            let params = ModelParams::sample(n, &mut rng);
            let results = verify_catalog(&params, &Identity::ALGEBRA, 100 * n as u64 + s).expect("catalog runs");
            for r in results {
                worst = worst.max(r.residual);
                if !(r.residual <= 1e-10) {
                    failed.push(format!("{} (N={n}, sample {s}): {:e}", r.identity_id, r.residual));
                }
            }
        }
    }
    let ok_time = within(t, 60);
    let detail = format!(
        "{} identities x 30 samples, max residual {worst:.2e}, {:.1}s{}",
        Identity::ALGEBRA.len(),
        t.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!(", failing: {}", failed.join("; ")) }
    );
    outcome(failed.is_empty() && ok_time, detail)
}

fn transfer_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut comm, mut init, mut asym) = (0.0f64, 0.0f64, 0.0f64);
    for n in 1..=4 {
        let params = ModelParams::sample(n, &mut rng);
        for _ in 0..20 {
            let pts = sample_points(Identity::TransferCommute, &mut rng);
            let r = verify_identity("transfer_commute", &params, &pts, 1e-11).expect("commutator");
            comm = comm.max(r.residual);
        }
        let expected: C64 = params
            .theta
            .iter()
            .fold(params.p * params.q * 2.0, |a, t| a * (cr(1.0) - t) * (cr(1.0) + t));
        let (tau0, off) = transfer_matrix(cr(0.0), &params).identity_multiple();
        init = init.max(rel(tau0, expected)).max(off);
        asym = asym.max(transfer_asymptotic_richardson(&params, 1e3));
    }
    outcome(
        comm <= 1e-11 && init <= 1e-12 && asym <= 1e-6,
        format!("commutator {comm:.2e}, tau(0) {init:.2e}, extrapolated leading term {asym:.2e}"),
    )
}

fn central_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut bb, mut func) = (0.0f64, 0.0f64);
    for n in 1..=4 {
        for _ in 0..3 {
            let params = ModelParams::sample(n, &mut rng);
            bb = bb_vanishing_ratios(&params).into_iter().fold(bb, f64::max);
            func = operator_functional_residuals(&params).into_iter().fold(func, f64::max);
        }
    }
    outcome(bb <= 1e-11 && func <= 1e-10, format!("B(θ)B(θ-1) ratio {bb:.2e}, τ(θ)τ(θ-1) residual {func:.2e}"))
}

fn quantum_determinant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut forms = 0.0f64;
    for n in 1..=3 {
        for _ in 0..10 {
            let params = ModelParams::sample(n, &mut rng);
            let u = sample_points(Identity::TransferCommute, &mut rng)[0];
            let a = determinant_factors(u, &params, DeterminantMode::ClosedForm).product();
            let b = determinant_factors(u, &params, DeterminantMode::TraceForm).product();
            forms = forms.max(rel(a, b));
        }
    }
    let mut factor = 0.0f64;
    let mut printed_gap = f64::INFINITY;
    for n in 1..=3 {
        for (p, q) in [(1.3, 2.1), (0.8, 1.7)] {
            let params = ModelParams::homogeneous(n, p, q, 1.0).expect("valid");
            for cand in lambda_from_oracle(&params).expect("oracle") {
                let f = homogeneous_condition_residuals(&cand.poly, &params, false);
                let g = homogeneous_condition_residuals(&cand.poly, &params, true);
                factor = f.into_iter().fold(factor, f64::max);
                printed_gap = printed_gap.min(g.into_iter().fold(0.0, f64::max));
            }
        }
    }
    outcome(
        forms <= 1e-12 && factor <= 1e-8 && printed_gap >= 1e-2,
        format!(
            "closed vs trace {forms:.2e}; homogeneous conditions at ξ=1: factor form {factor:.2e}, (1+ξ²)² form smallest gap {printed_gap:.2e}"
        ),
    )
}

fn lambda_extraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut counts = true;
    let mut n4_secs = 0.0;
    for n in 1..=4 {
        let t = Instant::now();
        for params in [ModelParams::sample(n, &mut rng), ModelParams::sample_homogeneous(n, &mut rng)] {
            let oracle = lambda_from_oracle(&params).expect("oracle");
            counts &= oracle.len() == 1 << n;
            for cand in &oracle {
                worst = worst.max(lambda_properties(&cand.poly, &params).max_residual());
            }
        }
        if n == 4 {
            n4_secs = t.elapsed().as_secs_f64();
        }
    }
    outcome(
        counts && worst <= 1e-8 && n4_secs <= 30.0,
        format!("2^N eigenvalues for N=1..4: {counts}, max property residual {worst:.2e}, N=4 in {n4_secs:.1}s"),
    )
}

fn functional_solve() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut summary = Vec::new();
    for n in 1..=2 {
        for (params, mode) in [
            (ModelParams::sample(n, &mut rng), FunctionalMode::Inhomogeneous),
            (ModelParams::sample_homogeneous(n, &mut rng), FunctionalMode::Homogeneous),
        ] {
            let seeds = functional_seeds(&params, 500, 7);
            let sol = solve_lambda_functional(&params, mode, &seeds).expect("functional solve");
            let oracle = lambda_from_oracle(&params).expect("oracle");
            let cov = oracle_coverage(&oracle, &sol.candidates);
            worst = cov.iter().fold(worst, |a, &b| a.max(b));
            summary.push(format!(
                "N={n} {:?}: {}/{}",
                mode,
                cov.iter().filter(|d| **d <= 1e-7).count(),
                oracle.len()
            ));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-7 && secs <= 120.0,
        format!("{} recovered, max coefficient distance {worst:.2e}, 500 seeds, {secs:.1}s", summary.join(", ")),
    )
}

fn bae_energies() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // N = 1 against the 2x2 closed form
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst1 = 0.0f64;
    for _ in 0..5 {
        let params = ModelParams::sample_homogeneous(1, &mut rng);
        let (p, q, xi) = (params.p.re, params.q.re, params.xi.re);
        let e = ((1.0 / p + 1.0 / q).powi(2) + xi * xi / (q * q)).sqrt();
        let exact = [-e, e];
        let mut energies = Vec::new();
        for branch in Branch::BOTH {
            let ctx = TQContext::new(&params, branch).expect("context");
            if let Ok(rep) = solve_bae(&ctx, 0, &SolveOptions::default()) {
                energies.extend(rep.solutions.iter().filter_map(|s| s.energy));
            }
        }
        for x in exact {
            let d = energies.iter().map(|en| (en - x).norm()).fold(f64::INFINITY, f64::min);
            worst1 = worst1.max(d);
        }
        for en in &energies {
            let d = exact.iter().map(|x| (en - x).norm()).fold(f64::INFINITY, f64::min);
            worst1 = worst1.max(d);
        }
    }
    ok &= worst1 <= 1e-9;
    notes.push(format!("N=1 union vs ±√((1/p+1/q)²+ξ²/q²): {worst1:.2e}"));

    // N = 2, parallel fields
    let diag = ModelParams::homogeneous(2, 1.3, 2.1, 0.0).expect("valid");
    let rep = spectrum_match(&diag, MPolicy::Default, &SolveOptions::default(), 1e-8).expect("match");
    ok &= rep.matched_fraction == 1.0;
    notes.push(format!("N=2 ξ=0: fraction {} (max distance {:.2e})", rep.matched_fraction, rep.max_distance));

    // N = 2, generic
    let generic = ModelParams::homogeneous(2, 1.3, 2.1, 0.5).expect("valid");
    let rep = spectrum_match(&generic, MPolicy::Sweep, &SolveOptions::default(), 1e-6).expect("match");
    let full = rep.matched_fraction == 1.0 && rep.completeness_flag.is_none();
    ok &= full || rep.completeness_flag.is_some();
    notes.push(format!(
        "N=2 ξ=0.5 sweep: fraction {} with {} seeds{}",
        rep.matched_fraction,
        rep.seeds,
        rep.completeness_flag.as_deref().map(|f| format!(" [{f}]")).unwrap_or_default()
    ));

    // flagging path: one seed cannot reach every level
    let thin = SolveOptions { seed_count: 1, ..SolveOptions::default() };
    let rep = spectrum_match(&generic, MPolicy::Sweep, &thin, 1e-6).expect("match");
    let flagged = rep.matched_fraction < 1.0 && rep.completeness_flag.is_some();
    ok &= flagged;
    notes.push(format!(
        "under-seeded: {}",
        rep.completeness_flag.as_deref().unwrap_or("NOT FLAGGED")
    ));
    outcome(ok, notes.join("; "))
}

fn xi_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params = ModelParams::homogeneous(3, 1.3, 2.1, 0.0).expect("valid");
    let mut third_zero = true;
    let mut form = 0.0f64;
    for branch in Branch::BOTH {
        let ctx = TQContext::new(&params, branch).expect("context");
        let s = branch.sign();
        for _ in 0..10 {
            let pts = sample_points(Identity::Qybe, &mut rng);
            let (lam, mu) = (pts[0], pts[1]);
            let merged = BetheRootSet::new(branch, vec![lam], vec![mu], vec![mu]).expect("roots");
            let apart = BetheRootSet::new(branch, vec![lam], vec![mu], vec![pts[2]]).expect("roots");
            for roots in [&merged, &apart] {
                third_zero &= inhomogeneous_term(pts[2] + c(0.3, 0.1), roots, &ctx).expect("term") == cr(0.0);
            }
            // Q̄ = Q Q1 with merged μ = ν
            let qbar = |u: C64| (u - lam) * (u + lam + 1.0) * (u - mu) * (u + mu + 1.0);
            let (p, q) = (params.p, params.q);
            let u = c(0.41, -0.27) + pts[2] * 0.5;
            let abar = (u * 2.0 + 2.0) / (u * 2.0 + 1.0) * (u + p * s) * (u + q * s) * (u + 1.0).powi(6);
            let dbar = (u * 2.0) / (u * 2.0 + 1.0) * (u - p * s + 1.0) * (u + 1.0 - q * s) * u.powi(6);
            let ordinary = abar * qbar(u - 1.0) / qbar(u) + dbar * qbar(u + 1.0) / qbar(u);
            form = form.max(rel(eval_tq_lambda(u, &merged, &ctx).expect("Λ"), ordinary));
            form = form.max(rel(a_bar(u, &ctx), abar)).max(rel(d_bar(u, &ctx), dbar));
        }
    }

    // energies along ξ = 0 → 0.5
    let target = ModelParams::homogeneous(2, 1.3, 2.1, 0.5).expect("valid");
    let opts = SolveOptions { strategy: Strategy::HomotopyXi, ..SolveOptions::default() };
    let mut drift = 0.0f64;
    let mut paths = 0;
    let mut ends_ok = true;
    for branch in Branch::BOTH {
        let ctx = TQContext::new(&target, branch).expect("context");
        let Ok(rep) = solve_bae(&ctx, 1, &opts) else { continue };
        for sol in &rep.solutions {
            let e: Vec<C64> = sol.path.iter().filter_map(|p| p.energy).collect();
            if e.len() != sol.path.len() || sol.path.first().map(|p| p.xi) != Some(cr(0.0)) {
                ends_ok = false;
                continue;
            }
            paths += 1;
            drift = e.windows(2).map(|w| (w[1] - w[0]).norm()).fold(drift, f64::max);
            for (xi, en) in [(0.0, e[0]), (0.5, e[e.len() - 1])] {
                let h = hamiltonian(&target.with_xi(cr(xi)), HamiltonianMode::Direct).expect("H");
                let d = hermitian_eigenvalues(h.entries())
                    .into_iter()
                    .map(|x| (en - x).norm())
                    .fold(f64::INFINITY, f64::min);
                ends_ok &= d <= 1e-8;
            }
        }
    }
    outcome(
        third_zero && form <= 1e-12 && paths > 0 && ends_ok && drift <= 1e-3,
        format!(
            "third term exactly zero: {third_zero}; ordinary form {form:.2e}; {paths} homotopy paths, per-step drift {drift:.2e}, endpoints on the spectrum: {ends_ok}"
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let bin = env!("CARGO_BIN_EXE_odba");
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, args) in [
        ("verify", vec!["verify", "--N", "2", "--p", "2", "--q", "3", "--xi", "0.5", "--theta", "0.2,-0.4"]),
        ("solve-bae", vec!["solve-bae", "--N", "2", "--p", "1.3", "--q", "2.1", "--xi", "0.5", "--M", "sweep"]),
        ("solve-functional", vec!["solve-functional", "--N", "2", "--p", "1.3", "--q", "2.1", "--xi", "0.5", "--rng-seed", "11"]),
    ] {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let out = dir.path().join(format!("{name}.json"));
            let status = Process::new(bin)
                .args(&args)
                .arg("--out")
                .arg(&out)
                .env_remove("ODBA_CACHE_DIR")
                .status()
                .expect("binary runs");
            ok &= status.success();
            outputs.push(std::fs::read(&out).expect("report written"));
        }
        let same = outputs[0] == outputs[1];
        ok &= same;
        notes.push(format!("{name}: {}", if same { "identical" } else { "DIFFERENT" }));
    }
    outcome(ok, notes.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("identity suite", identity_suite),
        ("transfer properties", transfer_properties),
        ("central ODBA identities", central_identities),
        ("quantum determinant", quantum_determinant),
        ("eigenvalue extraction", lambda_extraction),
        ("functional solve", functional_solve),
        ("Bethe roots and energies", bae_energies),
        ("xi -> 0 reduction", xi_reduction),
        ("determinism", determinism),
    ];
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        all &= o.passed;
        println!(
            "criterion {} {name}: {} ({}) [{:.1}s]",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
