//! One PASS/FAIL line per acceptance criterion; the test fails if any
//! criterion fails.

use hybris::attack::{
    check_admissible, generate_admissible, AdmissibilityParams, AttackSchedule, GeneratorOptions, ScheduleEvent,
    ScheduleStyle,
};
use hybris::batch::{self, Execution};
use hybris::certify::{self, XiParams, LoopInputs};
use hybris::matrixlab::{self, Mat};
use hybris::scenarios::builders;
use hybris::scenarios::repro::{repro, Experiment, ReproSummary};
use hybris::scenarios::{resolve, run, RunSummary, ScenarioConfig, ScheduleSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::time::Instant;

struct Report {
    lines: Vec<(usize, bool, String)>,
}

impl Report {
    fn record(&mut self, id: usize, title: &str, ok: bool, detail: String, t0: Instant) {
        let line = format!(
            "{} criterion {id:>2} {title}: {detail} [{:.2} s]",
            if ok { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
        self.lines.push((id, ok, line));
    }
}

fn rand_mat(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Mat {
    Mat::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
}

// Eigenvalues of a real 2x2 matrix from its characteristic polynomial.
fn eig2(a: &Mat) -> [(f64, f64); 2] {
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        [(tr / 2.0 + disc.sqrt(), 0.0), (tr / 2.0 - disc.sqrt(), 0.0)]
    } else {
        [(tr / 2.0, (-disc).sqrt()), (tr / 2.0, -(-disc).sqrt())]
    }
}

fn criterion_1(rep: &mut Report) {
    let t0 = Instant::now();
    let f = Mat::from_row_slice(2, 2, &[1.0, 0.0, 2.0, -1.5]);
    let n = Mat::from_row_slice(2, 1, &[1.0, 1.0]);
    let k = Mat::from_row_slice(1, 2, &[-40.0, 5.0]);
    let c = Mat::from_row_slice(2, 2, &[0.1, 0.0, 0.0, 0.1]);
    let a = &f + &n * &k * &c;
    let dev_oracle = eig2(&a).iter().map(|(re, im)| (re + 2.0).abs().max(im.abs())).fold(0.0, f64::max);
    let lib = matrixlab::eigenvalues(&a).unwrap();
    // a double pole is only recovered to about sqrt(machine eps) by a QR solver
    let dev_lib = lib.iter().map(|z| (z.re + 2.0).abs().max(z.im.abs())).fold(0.0, f64::max);
    let sum_dev = (lib.iter().map(|z| z.re).sum::<f64>() + 4.0).abs();
    let ok = dev_oracle <= 1e-9 && sum_dev <= 1e-9 && dev_lib <= 1e-7;
    rep.record(
        1,
        "pole placement",
        ok,
        format!("char-poly deviation {dev_oracle:.1e}, library eigenvalue deviation {dev_lib:.1e}"),
        t0,
    );
}

fn criterion_2(rep: &mut Report) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_res = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut failures = 0;
    for i in 0..200 {
        let n = 2 + i % 9;
        let m = rand_mat(&mut rng, n, n);
        let shift = matrixlab::max_real_part(&m).unwrap() + rng.gen_range(0.1..2.0);
        let a = &m - Mat::identity(n, n) * shift;
        let g = rand_mat(&mut rng, n, n);
        let r = &g * g.transpose() + Mat::identity(n, n) * 0.1;
        match matrixlab::solve_lyapunov(&a, &r) {
            Ok(p) => {
                worst_res = worst_res.max((a.transpose() * &p + &p * &a + &r).amax());
                min_eig = min_eig.min(p.clone().symmetric_eigen().eigenvalues.min());
            }
            Err(_) => failures += 1,
        }
    }
    let ok = failures == 0 && worst_res <= 1e-9 && min_eig > 0.0;
    rep.record(
        2,
        "Lyapunov solver",
        ok,
        format!("200 systems, worst residual {worst_res:.2e}, min eig(P) {min_eig:.2e}, {failures} failures"),
        t0,
    );
}

// Largest ε with Ξ(θ, ε) ≻ 0, found by bisection on the library verdict.
fn bisect_eps(l8: &XiParams, theta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, l8.alpha / l8.beta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if certify::xi_matrix(l8, theta, mid).pd {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

fn criterion_3(rep: &mut Report) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rel = 0.0f64;
    let mut worst_theta = 0.0f64;
    let steps = 2000;
    let h = 1.0 / steps as f64;
    for _ in 0..100 {
        let mut draw = || 10f64.powf(rng.gen_range(-1.5..1.5));
        let l8 = XiParams { alpha: draw(), beta: draw(), delta: draw(), chi: draw(), gamma: draw() };
        let oracle = l8.alpha * l8.gamma / (l8.beta * l8.gamma + l8.delta * l8.chi);
        let theta_star = l8.delta / (l8.delta + l8.chi);
        let found = bisect_eps(&l8, theta_star);
        worst_rel = worst_rel.max((found - oracle).abs() / oracle);
        let (arg, _) = (1..steps)
            .map(|i| {
                let th = i as f64 * h;
                (th, bisect_eps(&l8, th))
            })
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        worst_theta = worst_theta.max((arg - theta_star).abs());
    }
    let ok = worst_rel <= 1e-8 && worst_theta <= h;
    rep.record(
        3,
        "Xi bisection equivalence",
        ok,
        format!("100 tuples, worst relative eps* error {worst_rel:.2e}, worst theta offset {worst_theta:.2e} (grid {h:.0e})"),
        t0,
    );
}

fn unit_dynamic() -> certify::DynamicInputs {
    certify::DynamicInputs {
        mu: 1.0,
        ell: 1.0,
        ell_y: 1.0,
        m_bar: 1.0,
        lambda_min_r: 1.0,
        lambda_min_p: 1.0,
        lambda_max_p: 1.0,
        norm_c: 1.0,
        norm_g: 1.0,
        norm_h: 1.0,
        norm_pa_inv_b: 1.0,
        norm_pa_inv_e: 1.0,
        u_wbar: 1.0,
    }
}

fn unit_static() -> certify::StaticInputs {
    certify::StaticInputs {
        mu: 1.0,
        ell: 1.0,
        ell_y: 1.0,
        lambda_min_r: 1.0,
        lambda_min_p: 1.0,
        lambda_max_p: 1.0,
        beta_tilde: 1.0,
        lambda_bar_rhat: 1.0,
        norm_c: 1.0,
        norm_g: 1.0,
        norm_h: 1.0,
        norm_a_inv_b: 1.0,
        norm_a_inv_e: 1.0,
    }
}

fn criterion_4(rep: &mut Report) {
    let t0 = Instant::now();
    let e = std::f64::consts::E;
    let mut worst = 0.0f64;
    let mut cmp = |got: f64, want: f64| worst = worst.max((got - want).abs());

    // Controller loop, all constants 1, κ₁ = 0.1, κ₂ = 0.25, N₀ = 2, T₀ = 1:
    // ω = max{1, 1} = 1 so ln ω = 0; ρ_s = 2, ρ_a = 2; ρ = 2 − 0.25·4 = 1;
    // τ₀ = 0 + 2·1·(1 + 1) = 4; ε* = 1·1·1 / (2·(1 + 2e⁴)).
    let kd = certify::kappa_condition_dynamic(0.1, 0.25, 1.0, 1.0, 1.0);
    cmp(kd.omega, 1.0);
    cmp(kd.rho_s, 2.0);
    cmp(kd.rho_a, 2.0);
    cmp(kd.rho, 1.0);
    let tau_d = certify::tau0_dynamic(2.0, 1.0, 1.0, 1.0, 1.0, kd.omega);
    cmp(tau_d, 4.0);
    let eps_d = certify::eps_star_dynamic(&unit_dynamic(), kd.rho, tau_d).unwrap();
    cmp(eps_d, 1.0 / (2.0 * (1.0 + 2.0 * e.powi(4))));
    cmp(unit_dynamic().xi_params(kd.rho, tau_d).eps_star(), eps_d);

    // μ = 0.5, ℓ = 2, M̄ = 1, κ₁ = κ₂ = 0.1: ω = max{2, 8} = 8; ρ_s = 1;
    // ρ_a = 4; ρ = 1 − 0.5 − 0.1 ln 8; τ₀(N₀ = 1, T₀ = 0.5) = ln 8 + 2.5.
    let kd2 = certify::kappa_condition_dynamic(0.1, 0.1, 0.5, 2.0, 1.0);
    cmp(kd2.omega, 8.0);
    cmp(kd2.rho, 0.5 - 0.1 * 8f64.ln());
    cmp(certify::tau0_dynamic(1.0, 0.5, 0.5, 2.0, 1.0, 8.0), 8f64.ln() + 2.5);

    // Plant loop, all constants 1, κ₂ = 0.25, N₀ = 3, T₀ = 1: ω = 1; ρ_s = 1;
    // ρ_a = 1; ρ = 1 − 0.5 = 0.5; τ₀ = 0 + 1·2 = 2;
    // ε* = 0.5·1·1 / (2e²·1·(1 + 1)) = 1/(8e²).
    let ks = certify::kappa_condition_static(0.2, 0.25, 1.0, 1.0, 1.0, 1.0, 1.0);
    cmp(ks.omega, 1.0);
    cmp(ks.rho, 0.5);
    let tau_s = certify::tau0_static(3.0, 1.0, ks.omega, ks.rho_s, ks.rho_a);
    cmp(tau_s, 2.0);
    let eps_s = certify::eps_star_static(&unit_static(), ks.rho, tau_s).unwrap();
    cmp(eps_s, 1.0 / (8.0 * e * e));
    cmp(unit_static().xi_params(ks.rho, tau_s).eps_star(), eps_s);

    // λ̄(P) = 4, λ̲(P) = 1, β̃ = 2: ω = max{2, 2} = 2; ρ_s = λ̲(R)/λ̄(P) = 0.25.
    let ks2 = certify::kappa_condition_static(0.0, 0.0, 1.0, 4.0, 1.0, 3.0, 2.0);
    cmp(ks2.omega, 2.0);
    cmp(ks2.rho_s, 0.25);
    cmp(ks2.rho_a, 3.0);

    // Ξ unit example α = β = δ = χ = γ = 1: θ* = ½, ε* = ½;
    // at θ = ½, ε = ¼, Ξ = [[½(4 − 1), −½], [−½, ½]] = [[3/2, −½], [−½, ½]],
    // λ_min = 1 − √(¼ + ¼) = 1 − 1/√2.
    let l8 = XiParams { alpha: 1.0, beta: 1.0, delta: 1.0, chi: 1.0, gamma: 1.0 };
    cmp(l8.eps_star(), 0.5);
    let xi = certify::xi_matrix(&l8, 0.5, 0.25);
    cmp(xi.lambda_min, 1.0 - 0.5f64.sqrt());

    // Unit plant loop at θ = ½, τ₀ = 2: c_low = min{½, ¼} = ¼,
    // c_up = max{½e², ¼} = ½e², r = (2e²·½, ½) = (e², ½); with λ = k = ½,
    // ε = 0.1 the gain is √2·e·√(e⁴ + ¼)/0.025.
    let g = certify::iss_gain_static(&unit_static(), 2.0, 0.5, 0.5, 0.5, 0.1).unwrap();
    cmp(g.c_lower, 0.25);
    cmp(g.c_upper, 0.5 * e * e);
    cmp(g.r_vec[0], e * e);
    cmp(g.r_vec[1], 0.5);
    let want = 2f64.sqrt() * e * (e.powi(4) + 0.25).sqrt() / 0.025;
    cmp(g.gain_coeff / want, 1.0);

    let ok = worst <= 1e-12;
    rep.record(4, "certificate formulas vs hand oracles", ok, format!("worst abs deviation {worst:.1e}"), t0);
}

// Attack time and switch counts on a uniform grid; minimum slacks over grid pairs.
fn grid_oracle(s: &AttackSchedule, p: &AdmissibilityParams, ids: &[String], h: f64) -> (f64, f64) {
    let n = (s.horizon / h).round() as usize;
    let mut switch_slack = f64::INFINITY;
    let mut time_slack = f64::INFINITY;
    let (mut best_sw, mut best_tm) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut count = 0usize;
    let mut attack = 0.0;
    let mut next = 1;
    for k in 0..=n {
        let t = k as f64 * h;
        if k > 0 {
            let prev = t - h;
            let mut cursor = prev;
            while next < s.events.len() && s.events[next].time <= t {
                let ev = s.events[next].time;
                if ids.contains(&s.events[next - 1].mode) {
                    attack += ev - cursor;
                }
                cursor = ev;
                count += 1;
                next += 1;
            }
            if ids.contains(&s.events[next - 1].mode) {
                attack += t - cursor;
            }
        }
        // entries for s = t are included, covering the empty interval
        best_sw = best_sw.max(p.kappa1 * t - count as f64);
        best_tm = best_tm.max(p.kappa2 * t - attack);
        switch_slack = switch_slack.min(p.kappa1 * t - count as f64 - best_sw + p.n0 as f64);
        time_slack = time_slack.min(p.kappa2 * t - attack - best_tm + p.t0);
    }
    (switch_slack, time_slack)
}

fn random_schedule(rng: &mut ChaCha8Rng, ids: &[String], horizon: f64) -> AttackSchedule {
    let modes: Vec<String> = std::iter::once("s".to_string()).chain(ids.iter().cloned()).collect();
    let k = rng.gen_range(0..8);
    let mut times: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..horizon - 0.01)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 5e-3);
    let mut events = vec![ScheduleEvent { time: 0.0, mode: modes[rng.gen_range(0..modes.len())].clone() }];
    for t in times {
        let prev = events.last().unwrap().mode.clone();
        let choices: Vec<&String> = modes.iter().filter(|m| **m != prev).collect();
        events.push(ScheduleEvent { time: t, mode: choices[rng.gen_range(0..choices.len())].clone() });
    }
    AttackSchedule::new(events, horizon).unwrap()
}

fn criterion_5(rep: &mut Report) {
    let t0 = Instant::now();
    let ids = vec!["a1".to_string(), "a2".to_string()];
    let sets = [
        AdmissibilityParams { kappa1: 0.1, kappa2: 0.3, n0: 2, t0: 1.0 },
        AdmissibilityParams { kappa1: 1.0, kappa2: 0.5, n0: 1, t0: 0.2 },
        AdmissibilityParams { kappa1: 0.02, kappa2: 0.1, n0: 3, t0: 2.0 },
    ];
    let jobs: Vec<(usize, u64)> = (0..1000).map(|i| (i % 3, i as u64)).collect();
    let gen_fail = batch::map(&jobs, Execution::Parallel, |&(set, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = GeneratorOptions {
            style: if seed % 4 == 0 { ScheduleStyle::Periodic } else { ScheduleStyle::Random },
            mean_dwell: rng.gen_range(0.2..3.0),
            start_in_attack: rng.gen_bool(0.5),
            ..GeneratorOptions::default()
        };
        match generate_admissible(seed, &sets[set], &ids, 60.0, &opts) {
            Ok(s) => !check_admissible(&s, &sets[set], &ids).admissible,
            Err(_) => true,
        }
    })
    .into_iter()
    .filter(|&bad| bad)
    .count();

    let oracle_jobs: Vec<u64> = (0..200).collect();
    let h = 1e-4;
    let results = batch::map(&oracle_jobs, Execution::Parallel, |&seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let p = AdmissibilityParams {
            kappa1: rng.gen_range(0.5..5.0),
            kappa2: rng.gen_range(0.1..0.6),
            n0: rng.gen_range(1..7),
            t0: rng.gen_range(0.1..1.5),
        };
        let s = random_schedule(&mut rng, &ids, 2.0);
        let v = check_admissible(&s, &p, &ids);
        let (sw, tm) = grid_oracle(&s, &p, &ids, h);
        let oracle_ok = sw >= -1e-9 && tm >= -1e-9;
        let exact = v.switch_slack.min(v.time_slack);
        // grid pairs miss at most one step of κ-growth or attack time per endpoint
        let band = 2.0 * h * (1.0 + p.kappa1 + p.kappa2);
        (v.admissible == oracle_ok, exact.abs() <= band, v.admissible)
    });
    let disagree_outside_band = results.iter().filter(|(agree, near, _)| !agree && !near).count();
    let disagree = results.iter().filter(|(agree, _, _)| !agree).count();
    let admissible = results.iter().filter(|r| r.2).count();
    let ok = gen_fail == 0 && disagree_outside_band == 0;
    rep.record(
        5,
        "admissibility",
        ok,
        format!(
            "1000 generated: {gen_fail} rejected; dense-grid oracle on 200 ({admissible} admissible): {disagree} disagreements, {disagree_outside_band} outside the grid band"
        ),
        t0,
    );
}

fn certified_runs() -> Vec<ScenarioConfig> {
    let mut cfgs = Vec::new();
    for seed in 1..=25u64 {
        let mut c = builders::synthetic_static_certified();
        if let ScheduleSpec::Generated { seed: s, options } = &mut c.schedule {
            *s = seed;
            options.mean_dwell = 0.5 + (seed % 5) as f64 * 0.5;
            options.style = if seed % 3 == 0 { ScheduleStyle::Periodic } else { ScheduleStyle::Random };
        }
        c.name = format!("static-{seed}");
        cfgs.push(c);
    }
    for seed in 1..=25u64 {
        let mut c = builders::synthetic_dynamic_certified();
        if let ScheduleSpec::Generated { seed: s, options } = &mut c.schedule {
            *s = seed;
            options.start_in_attack = seed % 2 == 1;
        }
        c.horizon = 1000.0;
        c.name = format!("dynamic-{seed}");
        cfgs.push(c);
    }
    cfgs
}

fn criteria_6_7(rep: &mut Report) {
    let t0 = Instant::now();
    let cfgs = certified_runs();
    let summaries = batch::map(&cfgs, Execution::Parallel, |c| -> Result<RunSummary, String> {
        let r = resolve(c, None).map_err(|e| e.to_string())?;
        let o = run(&r).map_err(|e| e.to_string())?;
        Ok(RunSummary::new(&r, &o))
    });
    let mut errors = 0;
    let mut uncertified = 0;
    let (mut jumps, mut jump_bad, mut max_inc) = (0, 0, f64::NEG_INFINITY);
    let (mut flow_bad, mut worst_frac, mut eligible) = (0, 1.0f64, 0usize);
    for s in &summaries {
        match s {
            Ok(s) => {
                uncertified += usize::from(!s.certified);
                jumps += s.jump.jumps;
                jump_bad += usize::from(!s.jump.ok);
                if s.jump.jumps > 0 {
                    max_inc = max_inc.max(s.jump.max_increase);
                }
                flow_bad += usize::from(!s.flow.ok);
                worst_frac = worst_frac.min(s.flow.fraction);
                eligible += s.flow.eligible;
            }
            Err(e) => {
                println!("  run error: {e}");
                errors += 1;
            }
        }
    }
    let base_ok = errors == 0 && uncertified == 0;
    let t_mid = Instant::now();
    rep.record(
        6,
        "jump non-increase",
        base_ok && jump_bad == 0,
        format!(
            "50 certified runs ({errors} errors, {uncertified} not compliant), {jumps} jumps, largest U increase {max_inc:.2e}"
        ),
        t0,
    );
    rep.record(
        7,
        "flow decrease outside residual ball",
        base_ok && flow_bad == 0,
        format!("{eligible} eligible samples, worst per-run decreasing fraction {worst_frac:.4}, {flow_bad} runs below 99%"),
        t_mid,
    );
}

fn criterion_8(rep: &mut Report, dynamic: &ReproSummary) {
    let t0 = Instant::now();
    let run = dynamic.run("synthetic-dynamic-certified");
    let detail;
    let ok = match run {
        Some(r) => {
            let slope = r.log_error_slope.unwrap_or(f64::INFINITY);
            detail = format!(
                "eps {:.3e} <= eps* {:.3e}, admissible {}, log-error slope {slope:.3e}",
                r.eps,
                r.eps_star.unwrap_or(f64::NAN),
                r.admissible
            );
            r.certified && r.admissible && slope < -1e-3
        }
        None => {
            detail = "certified dynamic run missing".into();
            false
        }
    };
    rep.record(8, "UGES at constant w", ok, detail, t0);
}

fn criterion_9(rep: &mut Report, stat: &ReproSummary, dynamic: &ReproSummary) {
    let t0 = Instant::now();
    let s = stat.run("synthetic-static").map(|r| r.tail_sup_error).unwrap_or(f64::NAN);
    let d = dynamic.run("synthetic-dynamic").map(|r| r.tail_sup_error).unwrap_or(f64::NAN);
    let ok = s.is_finite() && s <= 2.0 * builders::reference::STATIC_TAIL_BOUND && d.is_finite();
    rep.record(
        9,
        "E-ISS at time-varying w",
        ok,
        format!("static tail sup error {s:.3e} (ceiling 42), dynamic tail sup error {d:.3e}"),
        t0,
    );
}

// Closed forms of ε* written out independently of the library.
fn eps_star_oracle(inputs: &LoopInputs, rho: f64, tau0: f64) -> f64 {
    match inputs {
        LoopInputs::Controller(i) => {
            let mn = i.mu.min(1.0);
            rho * i.lambda_min_r * mn
                / (2.0
                    * i.ell_y
                    * i.m_bar.max(1.0)
                    * i.norm_c
                    * i.norm_g
                    * i.norm_pa_inv_b
                    * (rho * mn + 2.0 * i.ell * i.ell.max(i.m_bar) * tau0.exp()))
        }
        LoopInputs::Plant(i) => {
            let lo = i.lambda_min_p.min(i.beta_tilde);
            let hi = i.lambda_max_p.max(i.beta_tilde);
            rho * lo * i.mu * i.mu
                / (2.0 * i.ell_y * tau0.exp() * i.norm_c * i.norm_g * i.norm_a_inv_b * hi * (i.mu * i.mu + i.ell * i.ell))
        }
    }
}

fn criterion_10(rep: &mut Report, stat: &ReproSummary, dynamic: &ReproSummary) {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut logged = Vec::new();
    let mut ok = true;
    for (cfg, summary, reported) in [
        (builders::synthetic_static_certified(), stat, builders::reference::EPS_STAR_STATIC),
        (builders::synthetic_dynamic_certified(), dynamic, builders::reference::EPS_STAR_DYNAMIC),
    ] {
        let r = resolve(&cfg, None).unwrap();
        let cert = &r.certificate;
        let oracle = eps_star_oracle(&cert.inputs, cert.rho, cert.tau0);
        let lib = cert.eps_star.unwrap_or(f64::NAN);
        worst = worst.max((lib - oracle).abs() / oracle);
        let log = summary.eps_star.iter().find(|l| l.computed == cert.eps_star);
        match log {
            Some(l) => {
                ok &= l.reported == reported;
                logged.push(format!("{:.4e} vs {reported} ({:+.2})", lib, l.relative_deviation.unwrap_or(f64::NAN)));
            }
            None => ok = false,
        }
        ok &= summary.eps_star.iter().all(|l| l.assumptions.params.kappa2 > 0.0);
    }
    ok &= worst <= 1e-12;
    rep.record(
        10,
        "eps* calibration (logged, not asserted against reported digits)",
        ok,
        format!("formula oracle relative error {worst:.1e}; logged {}", logged.join(", ")),
        t0,
    );
}

fn criterion_11(rep: &mut Report, grid: &ReproSummary, t_grid: f64) {
    let t0 = Instant::now();
    let hard_failures: Vec<&str> = grid.checks.iter().filter(|c| c.hard && !c.pass).map(|c| c.name.as_str()).collect();
    let ratio = |n: &str| grid.check(n).map_or(f64::NAN, |c| c.value);
    rep.record(
        11,
        "power grid",
        grid.passed && t_grid < 180.0,
        format!(
            "row sums {:.1e}, Hurwitz {}, late/early error ratio controller {:.2e} plant {:.2e}, {} hard failures, repro {t_grid:.1} s",
            ratio("susceptance_row_sums"),
            grid.check("reduced_model_hurwitz").is_some_and(|c| c.pass),
            ratio("controller_attack_constant_segment_error_ratio"),
            ratio("plant_attack_constant_segment_error_ratio"),
            hard_failures.len()
        ),
        t0,
    );
}

fn criterion_12(rep: &mut Report, dynamic: &ReproSummary) {
    let t0 = Instant::now();
    let ok = dynamic.check("permanent_attack_diverges").is_some_and(|c| c.pass);
    let note = dynamic.notes.iter().find(|n| n.contains("blew up")).cloned().unwrap_or_else(|| "monotone growth".into());
    rep.record(12, "divergence control case", ok, note, t0);
}

#[test]
fn acceptance() {
    let mut rep = Report { lines: Vec::new() };
    criterion_1(&mut rep);
    criterion_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep);
    criterion_5(&mut rep);
    criteria_6_7(&mut rep);

    let stat = repro(Experiment::SyntheticStatic, None, None).expect("static repro");
    let dynamic = repro(Experiment::SyntheticDynamic, None, None).expect("dynamic repro");
    let tg = Instant::now();
    let grid = repro(Experiment::PowerGrid, None, None).expect("grid repro");
    let t_grid = tg.elapsed().as_secs_f64();

    criterion_8(&mut rep, &dynamic);
    criterion_9(&mut rep, &stat, &dynamic);
    criterion_10(&mut rep, &stat, &dynamic);
    criterion_11(&mut rep, &grid, t_grid);
    criterion_12(&mut rep, &dynamic);

    rep.lines.sort_by_key(|l| l.0);
    // written past the harness's capture so the report shows in plain `cargo test` output
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "\n---- acceptance report ----");
    for (_, _, l) in &rep.lines {
        let _ = writeln!(out, "{l}");
    }
    let _ = out.flush();
    let failed: Vec<usize> = rep.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
