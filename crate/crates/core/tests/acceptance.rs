//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::time::Instant;

use seihrd::cir::{euler_maruyama_path, path_rng, sample_noncentral_chisq, sample_path, transition_constants};
use seihrd::ensemble::{histogram, run_ensemble, run_trajectories, summarize};
use seihrd::{
    integrate_deterministic, CirParameters, Compartment, EnsembleConfig, IndicatorSeries, Model, RateScheme, RunConfig,
    TimeGrid, Variable,
};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

struct Checks {
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.failures.push(what);
        }
    }

    fn relative(&mut self, name: &str, got: f64, want: f64, rel: f64) {
        let ok = (got - want).abs() <= rel * want.abs();
        self.check(ok, format!("{name}: got {got:.4}, want {want} ± {:.0}%", rel * 100.0));
    }

    fn absolute(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        self.check(ok, format!("{name}: got {got:.6}, want {want} ± {tol}"));
    }

    /// ±2% relative, or ±2 absolute for published values below 100.
    fn table(&mut self, name: &str, got: f64, want: f64) {
        if want.abs() < 100.0 {
            self.absolute(name, got, want, 2.0);
        } else {
            self.relative(name, got, want, 0.02);
        }
    }

    fn finish(self, detail: String) -> Outcome {
        if self.failures.is_empty() {
            Ok(detail)
        } else {
            Err(self.failures.join("; "))
        }
    }
}

fn china() -> (RunConfig, Model) {
    let config = RunConfig::bundled_default();
    let model = config.build_model().unwrap();
    (config, model)
}

fn ensemble_config(sigma: f64, paths: usize) -> (Model, EnsembleConfig) {
    let (config, model) = china();
    let mut ec = config.ensemble_config(&model).unwrap();
    ec.cir.sigma = sigma;
    ec.n_paths = paths;
    (model, ec)
}

fn deterministic_table() -> Outcome {
    let start = Instant::now();
    let (config, model) = china();
    let grid = config.grid(&model).map_err(|e| e.to_string())?;
    let traj = integrate_deterministic(&model, &grid, config.tolerances(&model)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let s69 = traj.state_at_day(69.0).unwrap();
    let s119 = traj.state_at_day(119.0).unwrap();
    let mut c = Checks::new();
    c.table("E(69)", s69.e, 2993.0);
    c.table("I(69)", s69.i, 1340.0);
    c.table("Iu(69)", s69.iu, 3854.0);
    c.table("HR(69)", s69.hr, 3252.0);
    c.table("HD(69)", s69.hd, 214.0);
    c.table("Rd(69)", s69.rd, 1846.0);
    c.table("Ru(69)", s69.ru, 4296.0);
    c.table("D(69)", s69.d, 131.0);
    c.table("Rd(119)", s119.rd, 8460.0);
    c.table("Ru(119)", s119.ru, 9969.0);
    c.table("D(119)", s119.d, 417.0);
    c.check(elapsed.as_secs_f64() < 1.0, format!("runtime {elapsed:?} ≥ 1 s"));
    c.finish(format!(
        "E(69)={:.1} I(69)={:.1} D(119)={:.1} in {:.1} ms",
        s69.e,
        s69.i,
        s119.d,
        elapsed.as_secs_f64() * 1e3
    ))
}

fn deterministic_outputs() -> Outcome {
    let (config, model) = china();
    let grid = config.grid(&model).map_err(|e| e.to_string())?;
    let traj = integrate_deterministic(&model, &grid, config.tolerances(&model)).map_err(|e| e.to_string())?;
    let ind = IndicatorSeries::compute(&traj, &model, &config.indicators).map_err(|e| e.to_string())?;
    let n69 = grid.node_at(69.0).unwrap();
    let n119 = grid.node_at(119.0).unwrap();
    let mut c = Checks::new();
    c.table("cm(69)", ind.c_m[n69], 5440.0);
    c.relative("Re(69)", ind.r_e[n69], 0.3363, 0.02);
    c.table("Hos(69)", ind.hos[n69], 4040.0);
    c.table("GammaE(69)", ind.gamma_e[n69], 5012.0);
    c.table("GammaIu(69)", ind.gamma_iu[n69], 4550.0);
    c.table("GammaH(69)", ind.gamma_h[n69], 198.0);
    c.table("cm(119)", ind.c_m[n119], 9140.0);
    c.absolute("Re(119)", ind.r_e[n119], 0.0013, 0.0002);
    c.table("Hos(119)", ind.hos[n119], 306.0);
    c.table("MHos(119)", ind.mhos[n119], 4558.0);
    c.finish(format!(
        "cm(69)={:.1} Re(69)={:.4} Hos(69)={:.1} Re(119)={:.5} MHos(119)={:.1}",
        ind.c_m[n69], ind.r_e[n69], ind.hos[n69], ind.r_e[n119], ind.mhos[n119]
    ))
}

fn low_volatility_means() -> Outcome {
    let (model, ec) = ensemble_config(0.1, 1 << 15);
    let start = Instant::now();
    let samples = run_ensemble(&model, &ec).map_err(|e| e.to_string())?;
    let summary = summarize(&samples, 0.95).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let row = |v, d| *summary.row(v, d).unwrap();
    let e69 = row(Variable::Compartment(Compartment::E), 69);
    let i69 = row(Variable::Compartment(Compartment::I), 69);
    let d119 = row(Variable::Compartment(Compartment::D), 119);
    let mut c = Checks::new();
    c.relative("mean E(69)", e69.mean, 3067.0, 0.05);
    c.relative("mean I(69)", i69.mean, 1376.0, 0.05);
    c.relative("mean D(119)", d119.mean, 426.0, 0.05);
    c.relative("WS D(119)", d119.p_ws, 614.0, 0.08);
    c.finish(format!(
        "E(69)={:.1} I(69)={:.1} D(119)={:.1} WS D(119)={:.1} in {:.1} s",
        e69.mean,
        i69.mean,
        d119.mean,
        d119.p_ws,
        elapsed.as_secs_f64()
    ))
}

fn high_volatility_regime() -> Outcome {
    let (model, ec) = ensemble_config(0.5, 1 << 15);
    let samples = run_ensemble(&model, &ec).map_err(|e| e.to_string())?;
    let variable = Variable::Compartment(Compartment::I);
    let xs = samples.get(variable, 69).unwrap();
    let summary = summarize(&samples, 0.95).map_err(|e| e.to_string())?;
    let i69 = summary.row(variable, 69).unwrap();
    let hist = histogram(xs, 200).map_err(|e| e.to_string())?;
    let below: u64 = hist.bins().filter(|b| b.1 <= i69.mean).map(|b| b.2).sum();
    let below = below as f64 / hist.total() as f64;
    let mut c = Checks::new();
    c.relative("mean I(69)", i69.mean, 2419.0, 0.10);
    c.relative("WS I(69)", i69.p_ws, 8522.0, 0.10);
    c.check(hist.total() == xs.len() as u64, "histogram lost samples".into());
    c.check(
        i69.mean > i69.median && below > 0.5,
        format!("no right skew: mean {} median {}, {below:.3} of histogram mass below the mean", i69.mean, i69.median),
    );
    c.finish(format!(
        "I(69) mean={:.1} WS={:.1} median={:.1}, {:.1}% of histogram mass below the mean",
        i69.mean,
        i69.p_ws,
        i69.median,
        below * 100.0
    ))
}

/// CDF of χ²(d, λ) as a Poisson(λ/2) mixture of central χ² CDFs.
fn noncentral_chisq_cdf(x: f64, d: f64, lambda: f64) -> f64 {
    let weights = Poisson::new(lambda / 2.0).unwrap();
    let centre = (lambda / 2.0) as u64;
    let spread = (12.0 * (lambda / 2.0).sqrt()).ceil() as u64 + 20;
    let lo = centre.saturating_sub(spread);
    (lo..=centre + spread).map(|k| weights.pmf(k) * ChiSquared::new(d + 2.0 * k as f64).unwrap().cdf(x)).sum()
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn cir_sampler() -> Outcome {
    const DRAWS: usize = 100_000;
    let delta = 1.0 / 6.0;
    let mut c = Checks::new();
    let mut detail = Vec::new();
    for (sigma, expected_dof) in [(0.1, 115.48), (0.5, 4.6192)] {
        let p = CirParameters { nu: 1.0, mu: 0.2887, sigma, beta0: 0.2887 };
        let k = transition_constants(delta, &p).map_err(|e| e.to_string())?;
        c.relative(&format!("d at σ={sigma}"), k.d, expected_dof, 1e-3);
        let mut rng = path_rng(7, (sigma * 1000.0) as u64);
        let xs: Vec<f64> = (0..DRAWS)
            .map(|_| k.c * sample_noncentral_chisq(k.d, k.noncentrality(p.beta0), &mut rng).unwrap())
            .collect();
        c.check(xs.iter().all(|x| *x >= 0.0), format!("negative sample at σ={sigma}"));

        // Analytic moments of the square-root diffusion after one step.
        let e = (-p.nu * delta).exp();
        let mean = p.beta0 * e + p.mu * (1.0 - e);
        let var =
            p.beta0 * sigma * sigma / p.nu * (e - e * e) + p.mu * sigma * sigma / (2.0 * p.nu) * (1.0 - e).powi(2);

        let n = DRAWS as f64;
        let m = xs.iter().sum::<f64>() / n;
        let s2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
        let se_mean = (s2 / n).sqrt();
        let se_var = ((m4 - s2 * s2) / n).sqrt();
        c.check((m - mean).abs() <= 3.0 * se_mean, format!("σ={sigma}: mean {m} vs {mean} (SE {se_mean:e})"));
        c.check((s2 - var).abs() <= 3.0 * se_var, format!("σ={sigma}: variance {s2:e} vs {var:e} (SE {se_var:e})"));

        let lambda = k.noncentrality(p.beta0);
        let raw: Vec<f64> = xs.iter().map(|x| x / k.c).collect();
        let ks = ks_statistic(raw, |x| noncentral_chisq_cdf(x, k.d, lambda));
        let critical = 1.628 / (DRAWS as f64).sqrt();
        c.check(ks < critical, format!("σ={sigma}: KS {ks:.5} ≥ {critical:.5}"));
        detail.push(format!(
            "σ={sigma}: mean z={:.2} var z={:.2} KS={ks:.4}<{critical:.4}",
            (m - mean) / se_mean,
            (s2 - var) / se_var
        ));
    }
    c.finish(detail.join(", "))
}

fn structural_invariants() -> Outcome {
    let mut c = Checks::new();

    let (model, mut ec) = ensemble_config(0.5, 256);
    let population = model.population();
    let trajectories = run_trajectories(&model, &ec).map_err(|e| e.to_string())?;
    let worst = trajectories
        .iter()
        .flat_map(|t| t.states().iter().map(|s| ((s.total() - population) / population).abs()))
        .fold(0.0, f64::max);
    c.check(worst <= 1e-9, format!("conservation drift {worst:e}"));

    ec.cir.sigma = 1e-9;
    ec.n_paths = 8;
    let (config, _) = china();
    let grid = config.grid(&model).unwrap();
    let det = integrate_deterministic(&model, &grid, config.tolerances(&model)).map_err(|e| e.to_string())?;
    let mut collapse = 0.0f64;
    for t in run_trajectories(&model, &ec).map_err(|e| e.to_string())? {
        for (a, b) in t.states().iter().zip(det.states()) {
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                collapse = collapse.max((x - y).abs() / y.abs().max(1.0));
            }
        }
    }
    c.check(collapse <= 1e-5, format!("σ→0 paths deviate by {collapse:e}"));

    ec.cir.sigma = 0.5;
    ec.n_paths = 2048;
    let mut summaries = Vec::new();
    for workers in [None, Some(1), Some(2), Some(4)] {
        ec.workers = workers;
        let samples = run_ensemble(&model, &ec).map_err(|e| e.to_string())?;
        summaries.push(summarize(&samples, 0.95).map_err(|e| e.to_string())?);
    }
    let identical = summaries.windows(2).all(|w| {
        w[0].rows.len() == w[1].rows.len()
            && w[0].rows.iter().zip(&w[1].rows).all(|(a, b)| {
                a.mean.to_bits() == b.mean.to_bits()
                    && a.q1.to_bits() == b.q1.to_bits()
                    && a.q3.to_bits() == b.q3.to_bits()
                    && a.p_ws.to_bits() == b.p_ws.to_bits()
            })
    });
    c.check(identical, "summaries differ across worker counts".into());
    let ordered = summaries[0].rows.iter().all(|r| r.q1 <= r.q3 && r.q3 <= r.p_ws);
    c.check(ordered, "quantiles out of order".into());

    c.finish(format!(
        "drift {worst:.1e}, σ→0 deviation {collapse:.1e}, {} summary rows identical over 4 worker settings",
        summaries[0].rows.len()
    ))
}

fn cross_scheme() -> Outcome {
    const PATHS: u64 = 100_000;
    let p = CirParameters { nu: 1.0, mu: 0.2887, sigma: 0.1, beta0: 0.2887 };
    let grid = TimeGrid::daily(119, 6).map_err(|e| e.to_string())?;
    let terminal = |scheme: RateScheme, seed: u64| -> (f64, f64) {
        let xs: Vec<f64> = (0..PATHS)
            .map(|i| {
                let mut rng = path_rng(seed, i);
                let path = match scheme {
                    RateScheme::Exact => sample_path(&grid, &p, &mut rng),
                    RateScheme::EulerMaruyama => euler_maruyama_path(&grid, &p, &mut rng),
                };
                *path.values().last().unwrap()
            })
            .collect();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let s2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, s2 / n)
    };
    let (exact, v_exact) = terminal(RateScheme::Exact, 11);
    let (em, v_em) = terminal(RateScheme::EulerMaruyama, 12);
    let combined = (v_exact + v_em).sqrt();
    let mut c = Checks::new();
    c.check((exact - em).abs() <= 3.0 * combined, format!("exact {exact} vs EM {em}, combined SE {combined:e}"));
    c.finish(format!("exact {exact:.5} EM {em:.5} diff {:.2} SE", (exact - em) / combined))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("AC1 deterministic compartments", deterministic_table),
        ("AC2 deterministic outputs", deterministic_outputs),
        ("AC3 stochastic means σ=0.1", low_volatility_means),
        ("AC4 high-volatility regime σ=0.5", high_volatility_regime),
        ("AC5 exact CIR sampler", cir_sampler),
        ("AC6 structural invariants", structural_invariants),
        ("AC7 Euler–Maruyama vs exact", cross_scheme),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        match run() {
            Ok(detail) => println!("PASS {name} ({:.1} s): {detail}", start.elapsed().as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({:.1} s): {why}", start.elapsed().as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
