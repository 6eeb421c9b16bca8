use std::fmt;
use std::path::{Path, PathBuf};

use cutoff_core::agent::{expected_transfer_cutoff, expected_transfer_truthful, Transfer};
use cutoff_core::elasticity::{elasticity, eta_inverse, scan_grid};
use cutoff_core::numeric::{lin_space, log_space};
use cutoff_core::oracle::{
    brute_force_best_transfer, cross_derivative_check, default_x_max, improve_to_cutoff, refute, BruteForceSettings,
};
use cutoff_core::solver::{
    check_output_mlrp, comparative_statics, noise_scaling, solve_classic_pa, solve_gaussian_prior,
    solve_unobserved_state, CutoffProblem,
};
use cutoff_core::{CostFunction, ElasticityProfile, PrecisionMap, SignalDensity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig, Variant};
use crate::output::{write_csv, write_json, OutDir};

/// Failure of a run, carrying its exit status.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Infeasible(String),
    Failed(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Infeasible(_) => 2,
            RunError::Config(_) | RunError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Infeasible(m) => write!(f, "{m}"),
            RunError::Failed(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<cutoff_core::Error> for RunError {
    fn from(e: cutoff_core::Error) -> Self {
        match e {
            cutoff_core::Error::NoFeasibleContract(_) => RunError::Infeasible(e.to_string()),
            other => RunError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Failed(e.to_string())
    }
}

type RunResult = Result<Value, RunError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Solve,
    Verify,
    Refute,
    Sweep,
    Compare,
}

/// Everything a command needs: the validated config and the built model.
pub struct Run<'a> {
    pub config: &'a RunConfig,
    pub density: SignalDensity,
    pub cost: CostFunction,
    pub out: OutDir,
    base: PathBuf,
}

impl<'a> Run<'a> {
    /// `base` resolves relative data-file paths (the config file's directory).
    pub fn prepare(config: &'a RunConfig, base: &Path) -> Result<Self, RunError> {
        config.validate()?;
        let density = config.density.build(base)?;
        let cost = config.cost.build(&density, base)?;
        let out = OutDir::create(&config.output.dir)?;
        Ok(Run { config, density, cost, out, base: base.to_path_buf() })
    }

    pub fn execute(&self, command: Command) -> RunResult {
        match command {
            Command::Analyze => self.analyze(),
            Command::Solve => self.solve(),
            Command::Verify => self.verify(),
            Command::Refute => self.refute(),
            Command::Sweep => self.sweep(),
            Command::Compare => self.compare(),
        }
    }

    fn require_base(&self, what: &str) -> Result<(), RunError> {
        if self.config.variant != Variant::Base {
            return Err(RunError::Config(format!("`{what}` supports only the base variant")));
        }
        Ok(())
    }

    fn require_one_dimension(&self, what: &str) -> Result<(), RunError> {
        if self.density.dimension() != 1 {
            return Err(RunError::Config(format!("`{what}` needs a one-dimensional density")));
        }
        Ok(())
    }

    fn precision_map(&self) -> PrecisionMap {
        match &self.config.variant {
            Variant::GaussianPrior { lambda0 } => PrecisionMap::GaussianPrior { lambda0: *lambda0 },
            Variant::Unobserved { lambda0, lambda_p, .. } => {
                PrecisionMap::Unobserved { lambda_p: *lambda_p, lambda0: lambda0.unwrap_or(0.0) }
            }
            Variant::Base | Variant::ClassicPa { .. } => PrecisionMap::Identity,
        }
    }

    fn analyze(&self) -> RunResult {
        let d = &self.density;
        let rows: Vec<Vec<f64>> = scan_grid(d)
            .into_iter()
            .step_by(8)
            .map(|x| vec![x, d.radial_pdf(x), d.radial_dpdf(x), elasticity(d, x).unwrap_or(f64::NAN), d.ball_mass(x)])
            .collect();
        write_csv(&self.out.file("elasticity.csv"), &["x", "pdf", "dpdf", "eta", "ball_mass"], &rows)?;
        let mut report = json!({
            "density": self.config.density,
            "conditions": ElasticityProfile::of(d),
        });
        if let Variant::ClassicPa { output } = &self.config.variant {
            report["output_mlrp"] =
                serde_json::to_value(check_output_mlrp(output, &self.config.numeric.classic())).expect("serializable");
        }
        write_json(&self.out.file("conditions.json"), &report)?;
        Ok(report)
    }

    fn solve(&self) -> RunResult {
        let s = self.config.numeric.solver();
        let result = match &self.config.variant {
            Variant::ClassicPa { output } => {
                let r = solve_classic_pa(output, &self.cost, &self.config.numeric.classic())?;
                let report = json!({ "variant": self.config.variant, "result": r });
                write_json(&self.out.file("solve.json"), &report)?;
                return Ok(report);
            }
            Variant::Base => CutoffProblem::new(&self.density, &self.cost).with_settings(s).optimal_cutoff()?,
            Variant::GaussianPrior { lambda0 } => solve_gaussian_prior(&self.density, *lambda0, &self.cost, &s)?,
            Variant::Unobserved { prior, lambda0, lambda_p } => {
                solve_unobserved_state(&self.density, *prior, *lambda0, *lambda_p, &self.cost, &s)?
            }
        };
        if self.config.output.csv {
            let problem = CutoffProblem::new(&self.density, &self.cost).with_map(self.precision_map()).with_settings(s);
            let top = if result.d_star > 0.0 { 3.0 * result.d_star } else { 3.0 * self.density.scale() };
            let mut rows = Vec::new();
            for d in lin_space(top / 200.0, top, 200) {
                let r = problem.response(d)?;
                rows.push(vec![d, r.lambda_star, r.payoff, self.precision_map().apply(r.lambda_star) * d]);
            }
            write_csv(&self.out.file("solve_curve.csv"), &["d", "lambda", "payoff", "product"], &rows)?;
        }
        let report = json!({ "variant": self.config.variant, "result": result });
        write_json(&self.out.file("solve.json"), &report)?;
        Ok(report)
    }

    fn verify(&self) -> RunResult {
        self.require_base("verify")?;
        let (d, c, cfg) = (&self.density, &self.cost, self.config);
        let v = &cfg.verify;
        let settings = cfg.numeric.solver();
        let profile = ElasticityProfile::of(d);
        let best = CutoffProblem::new(d, c).with_settings(settings).optimal_cutoff()?;
        let mut report = json!({ "density": cfg.density, "conditions": profile, "best_cutoff": best });
        // without increasing elasticity there is nothing to certify
        let mut certified = profile.iea_holds;

        // one step of the log-spaced precision grid at the optimum
        let r = settings.response;
        let ratio = (r.lambda_max / r.lambda_min).powf(1.0 / (r.grid_points - 1) as f64);
        let resolution = best.lambda_star * (ratio - 1.0);
        let x_max = v.x_max.unwrap_or_else(|| default_x_max(d));

        if d.dimension() == 1 {
            let brute = brute_force_best_transfer(
                d,
                c,
                &BruteForceSettings {
                    cells: v.brute_cells,
                    levels: v.brute_levels,
                    x_max: Some(x_max),
                    response: r,
                    seed: cfg.seed,
                    restarts: v.restarts,
                    threads: cfg.threads.max(1),
                },
            )?;
            let excess = brute.response.lambda_star - best.lambda_star;
            let holds = excess <= resolution;
            certified &= holds;
            report["brute_force"] = json!({
                "lambda": brute.response.lambda_star,
                "values": brute.values,
                "evaluated": brute.evaluated,
                "exhaustive": brute.exhaustive,
                "excess_over_cutoff": excess,
                "resolution": resolution,
                "cutoff_dominates": holds,
            });
        } else {
            report["brute_force"] = json!({ "skipped": "general transfers are searched in one dimension only" });
        }

        if profile.iea_holds && d.dimension() == 1 {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
            let edges = lin_space(-x_max, x_max, v.cells + 1);
            let mut entries = Vec::new();
            let mut rows = Vec::new();
            let (mut worst_gain, mut worst_drift) = (f64::INFINITY, 0.0_f64);
            for i in 0..v.transfers {
                let values: Vec<f64> = (0..v.cells).map(|_| rng.gen::<f64>()).collect();
                let t = Transfer::step(edges.clone(), values)?;
                let trace = improve_to_cutoff(d, &t, c, &r)?;
                let gain = trace.improved.lambda_star - trace.original.lambda_star;
                let mut drift: f64 = 0.0;
                for l in log_space(0.1, 10.0, 32) {
                    let a = expected_transfer_truthful(d, l, &trace.t_star)?;
                    let b = expected_transfer_truthful(d, l, &trace.t_tilde)?;
                    drift = drift.max((a - b).abs());
                }
                worst_gain = worst_gain.min(gain);
                worst_drift = worst_drift.max(drift);
                entries.push(json!({
                    "lambda_transfer": trace.original.lambda_star,
                    "report_offset": trace.original.report_offset,
                    "d": trace.d,
                    "lambda_cutoff": trace.improved.lambda_star,
                    "symmetrization_drift": drift,
                    "inequalities_hold": trace.inequalities_hold,
                }));
                if cfg.output.csv {
                    let reach = 1.5 * x_max;
                    for x in lin_space(-reach, reach, 241) {
                        rows.push(vec![
                            i as f64,
                            x,
                            t.value(x),
                            trace.t_star.value(x),
                            trace.t_tilde.value(x),
                            trace.t_tilde_prime.value(x),
                            if x.abs() <= trace.d { 1.0 } else { 0.0 },
                        ]);
                    }
                }
            }
            if cfg.output.csv {
                write_csv(
                    &self.out.file("pipeline.csv"),
                    &["transfer", "x", "t", "t_star", "t_tilde", "t_tilde_prime", "cutoff"],
                    &rows,
                )?;
            }
            let holds = worst_gain >= -1e-6 && worst_drift <= 1e-9;
            certified &= holds;
            report["pipeline"] = json!({
                "transfers": entries,
                "min_gain": if v.transfers > 0 { worst_gain } else { 0.0 },
                "max_symmetrization_drift": worst_drift,
                "holds": holds,
            });
        } else {
            report["pipeline"] = json!({
                "skipped": if profile.iea_holds {
                    "the pipeline runs on one-dimensional densities"
                } else {
                    "elasticity is not increasing above the dimension; cutoffs need not dominate"
                },
            });
        }

        let n = d.dimension();
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(1));
        let (mut checked, mut mismatches, mut worst) = (0usize, 0usize, 0.0_f64);
        let mut attempts = 0;
        while checked < v.cross_points && attempts < 100 * v.cross_points {
            attempts += 1;
            let (l, x) = (rng.gen_range(0.25..2.0), rng.gen_range(0.25..2.0) * d.scale());
            let prod = l * x;
            if prod >= d.support_halfwidth() {
                continue;
            }
            let gap = n as f64 - elasticity(d, prod)?;
            if gap.abs() <= 1e-2 {
                continue;
            }
            let cd = cross_derivative_check(d, l, x, n)?;
            if cd.near_kink {
                continue;
            }
            checked += 1;
            if cd.fd.signum() != gap.signum() {
                mismatches += 1;
            }
            worst = worst.max((cd.fd - cd.closed_form).abs());
        }
        let holds = mismatches == 0 && worst < 1e-4;
        certified &= holds;
        report["cross_derivative"] =
            json!({ "checked": checked, "sign_mismatches": mismatches, "max_abs_error": worst, "holds": holds });
        report["certified"] = json!(certified);
        write_json(&self.out.file("verify.json"), &report)?;
        Ok(report)
    }

    fn refute(&self) -> RunResult {
        self.require_base("refute")?;
        self.require_one_dimension("refute")?;
        let r = refute(&self.density, &self.config.refute_settings())?;
        if self.config.output.csv {
            let reach = 1.25 * r.brute_force.x_max.max(r.settings.x2 / r.settings.lambda_ref);
            let rows: Vec<Vec<f64>> = lin_space(-reach, reach, 801)
                .into_iter()
                .map(|x| {
                    let cut = if x.abs() <= r.best_cutoff.d_star { 1.0 } else { 0.0 };
                    vec![x, cut, r.counterexample.transfer.value(x), r.brute_force.transfer.value(x)]
                })
                .collect();
            write_csv(
                &self.out.file("refute_transfers.csv"),
                &["x", "best_cutoff", "counterexample", "brute_force"],
                &rows,
            )?;
        }
        let report = json!({ "density": self.config.density, "refutation": r });
        write_json(&self.out.file("refute.json"), &report)?;
        Ok(report)
    }

    fn sweep(&self) -> RunResult {
        let (d, s) = (&self.density, &self.config.sweep);
        let n = d.dimension();
        let lambdas = lin_space(s.lambda_min, s.lambda_max, s.lambda_points);
        let cutoffs = lin_space(s.d_min, s.d_max, s.d_points);
        let mut rows = Vec::with_capacity(lambdas.len() * cutoffs.len());
        for &l in &lambdas {
            for &c in &cutoffs {
                let eta = elasticity(d, l * c)?;
                let region = if eta < n as f64 { 1.0 } else { -1.0 };
                rows.push(vec![l, c, expected_transfer_cutoff(d, l, c, n)?, eta, region]);
            }
        }
        write_csv(&self.out.file("surface.csv"), &["lambda", "d", "value", "eta", "complement"], &rows)?;
        let threshold = eta_inverse(d, n as f64);
        let curve: Vec<Vec<f64>> = lambdas.iter().map(|&l| vec![l, threshold.value / l]).collect();
        write_csv(&self.out.file("boundary.csv"), &["lambda", "d"], &curve)?;
        let report = json!({
            "density": self.config.density,
            "threshold": threshold.value,
            "threshold_overflow": threshold.overflow,
            "surface_points": rows.len(),
        });
        write_json(&self.out.file("sweep.json"), &report)?;
        Ok(report)
    }

    fn compare(&self) -> RunResult {
        self.require_base("compare")?;
        let (d, c, cfg) = (&self.density, &self.cost, self.config);
        let s = cfg.numeric.solver();
        let mut costs = Vec::new();
        for &k in &cfg.compare.factors {
            costs.push((json!({ "factor": k }), c.scaled(k)?));
        }
        if let Some(spec) = &cfg.compare.second_cost {
            costs.push((json!({ "cost": spec }), spec.build(d, &self.base)?));
        }
        let mut cost_reports = Vec::new();
        for (label, other) in costs {
            let r = comparative_statics(d, c, &other, &s)?;
            cost_reports.push(json!({ "against": label, "result": r }));
        }
        let mut noise_reports = Vec::new();
        for &k in &cfg.compare.noise_scales {
            noise_reports.push(serde_json::to_value(noise_scaling(d, c, k, &s)?).expect("serializable"));
        }
        let report = json!({ "density": cfg.density, "costs": cost_reports, "noise": noise_reports });
        write_json(&self.out.file("compare.json"), &report)?;
        Ok(report)
    }
}
