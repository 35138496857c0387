use std::time::Instant;

use mflq_core::alm::{
    alm_expected_means, alm_from_returns, alm_gains, alm_optimal_value, expected_terminal_equity,
    reference, solve_alm_riccati, validate_alm, AlmRiccati, MomentEstimation,
};
use mflq_core::io::{parse_alm, parse_initial_moments, parse_problem, AnyProblem};
use mflq_core::noise::NoiseLaw;
use mflq_core::riccati::equivalence_residual;
use mflq_core::simulate::MeanField;
use mflq_core::{
    build_policy, optimal_cost, simulate_closed_loop, solve_p_form, solve_riccati, solve_riccati_multinoise,
    validate_problem, AlmProblem, InitSampler, InitialMoments, MultiNoiseProblemSpec, NoiseSampler,
    RiccatiSolution, SamplerKind, ValidationReport,
};
use serde_json::{json, Map, Value};

use crate::args::{AlmArgs, ExampleArgs, MomentArg, SamplerArg, SimulateArgs, SolveArgs};
use crate::report::{fmt6, gains, header, matrix_lines, p_form, riccati};
use crate::{digest, read_input, thread_cap, CliError, Outcome, EXIT_OK, EXIT_VALIDATION};

/// The three-period example as an ALM document.
pub const EXAMPLE_ALM: &str = include_str!("../data/three_period_alm.json");
/// The same example lifted to the general vector-noise schema.
pub const EXAMPLE_LIFTED: &str = include_str!("../data/three_period_alm_lifted.json");

fn violations_text(v: &ValidationReport) -> String {
    let mut s = String::from("validation failed:\n");
    for x in &v.violations {
        s.push_str(&format!("  {} at k = {} (lambda_min = {})\n", x.condition.id(), x.k, fmt6(x.lambda_min)));
    }
    s
}

fn rejected(mut rep: Map<String, Value>, v: &ValidationReport) -> Outcome {
    rep.insert("validation".into(), json!(v));
    Outcome {
        code: EXIT_VALIDATION,
        text: violations_text(v),
        report: Value::Object(rep),
    }
}

fn value_table(sol: &RiccatiSolution) -> String {
    let big_n = sol.horizon();
    let mut s = String::new();
    if sol.sx[0].nrows() == 1 {
        s.push_str(&format!(
            "{:>3} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            "k", "Sx", "Tx", "Sxy", "Txy", "Sy", "Ty"
        ));
        for k in 0..=big_n {
            let cells: Vec<String> = [&sol.sx, &sol.tx, &sol.sxy, &sol.txy, &sol.sy, &sol.ty]
                .iter()
                .map(|v| format!("{:>12}", fmt6(v[k][(0, 0)])))
                .collect();
            s.push_str(&format!("{k:>3} {}\n", cells.join(" ")));
        }
        return s;
    }
    for k in 0..=big_n {
        s.push_str(&format!("k = {k}\n"));
        for (name, v) in [
            ("Sx", &sol.sx),
            ("Tx", &sol.tx),
            ("Sxy", &sol.sxy),
            ("Txy", &sol.txy),
            ("Sy", &sol.sy),
            ("Ty", &sol.ty),
        ] {
            s.push_str(&format!("  {name}\n{}", matrix_lines(&v[k], "    ")));
        }
    }
    s
}

fn gain_table(policy: &mflq_core::FeedbackPolicy) -> String {
    let mut s = String::new();
    for (k, g) in policy.gains.iter().enumerate() {
        s.push_str(&format!("gains k = {k}\n"));
        for (name, m) in [("Kx", &g.kx), ("Kx_bar", &g.kx_bar), ("Ky", &g.ky), ("Ky_bar", &g.ky_bar)] {
            s.push_str(&format!("  {name}\n{}", matrix_lines(m, "    ")));
        }
    }
    s
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Outcome, CliError> {
    let text = read_input(&args.problem)?;
    let mut rep = header("solve", Some(&digest(text.as_bytes())));
    let loaded = parse_problem(&text)?;
    rep.insert("warnings".into(), json!(loaded.warnings));
    let validation = match &loaded.value {
        AnyProblem::Scalar(s) => validate_problem(s),
        AnyProblem::Multi(s) => validate_problem(s),
    };
    if !validation.ok {
        return Ok(rejected(rep, &validation));
    }
    rep.insert("validation".into(), json!(validation));
    let sol = match &loaded.value {
        AnyProblem::Scalar(s) => solve_riccati(s)?,
        AnyProblem::Multi(s) => solve_riccati_multinoise(s)?,
    };
    let policy = build_policy(&sol)?;
    let mut out = value_table(&sol);
    out.push_str(&gain_table(&policy));
    rep.insert("riccati".into(), riccati(&sol));
    rep.insert("gains".into(), gains(&policy));
    if args.p_form {
        let AnyProblem::Scalar(spec) = &loaded.value else {
            return Err(CliError::Validation("--p-form requires a scalar-noise problem".into()));
        };
        let p = solve_p_form(spec)?;
        let residual = equivalence_residual(&p, &sol);
        out.push_str(&format!("P-form vs S/T max relative deviation: {}\n", fmt6(residual)));
        rep.insert("p_form".into(), p_form(&p));
        rep.insert("equivalence_residual".into(), json!(residual));
    }
    for w in &loaded.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    Ok(Outcome {
        code: EXIT_OK,
        text: out,
        report: Value::Object(rep),
    })
}

fn load_moments(path: Option<&std::path::Path>, n: usize) -> Result<InitialMoments, CliError> {
    let init = match path {
        Some(p) => parse_initial_moments(&read_input(p)?)?,
        None => InitialMoments::standard(n),
    };
    if init.dim() != n {
        return Err(CliError::Validation(format!(
            "initial moments have dimension {}, problem has {n}",
            init.dim()
        )));
    }
    Ok(init)
}

fn with_threads<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match thread_cap()? {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Validation(format!("cannot start {t} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    if args.ci && args.seed.is_none() {
        return Err(CliError::Validation("--ci requires an explicit --seed".into()));
    }
    let seed = args.seed.unwrap_or_else(rand::random);
    let text = read_input(&args.problem)?;
    let mut rep = header("simulate", Some(&digest(text.as_bytes())));
    let loaded = parse_problem(&text)?;
    rep.insert("warnings".into(), json!(loaded.warnings));
    let spec: MultiNoiseProblemSpec = match loaded.value {
        AnyProblem::Scalar(s) => s.to_multinoise(),
        AnyProblem::Multi(s) => s,
    };
    let validation = validate_problem(&spec);
    if !validation.ok {
        return Ok(rejected(rep, &validation));
    }
    if args.paths < 2 {
        return Err(CliError::Validation("--paths must be at least 2".into()));
    }
    let init = load_moments(args.init.as_deref(), spec.base.state_dim)?;
    let t_solve = Instant::now();
    let sol = solve_riccati_multinoise(&spec)?;
    let policy = build_policy(&sol)?;
    let solve_secs = t_solve.elapsed().as_secs_f64();
    let kind = match args.sampler {
        SamplerArg::Gaussian => SamplerKind::Gaussian,
        SamplerArg::Rademacher => SamplerKind::Rademacher,
    };
    let mean_field = if args.population_coupling {
        MeanField::PopulationCoupling
    } else {
        MeanField::Analytic
    };
    let noise = NoiseSampler::new(kind, NoiseLaw::from_problem(&spec), seed)?;
    let init_sampler = InitSampler::new(kind, init.clone());
    let t_sim = Instant::now();
    let res = with_threads(|| simulate_closed_loop(&spec, &policy, &init_sampler, &noise, args.paths, mean_field))??;
    let sim_secs = t_sim.elapsed().as_secs_f64();

    let optimal = optimal_cost(&sol, &init);
    let z = (res.cost_mean - optimal) / res.cost_std_err;
    rep.insert("validation".into(), json!(validation));
    rep.insert("seed".into(), json!(seed));
    rep.insert("paths".into(), json!(args.paths));
    rep.insert("sampler".into(), json!(kind));
    rep.insert("mean_field".into(), json!(mean_field));
    rep.insert("cost_mean".into(), json!(res.cost_mean));
    rep.insert("cost_std_err".into(), json!(res.cost_std_err));
    rep.insert("optimal_cost".into(), json!(optimal));
    rep.insert("z_score".into(), json!(z));
    rep.insert("expected".into(), json!(res.expected));
    rep.insert(
        "sample_mean_x".into(),
        json!(res.sample_mean_x.iter().map(|v| v.as_slice().to_vec()).collect::<Vec<_>>()),
    );
    rep.insert(
        "sample_se_x".into(),
        json!(res.sample_se_x.iter().map(|v| v.as_slice().to_vec()).collect::<Vec<_>>()),
    );
    if args.timings {
        rep.insert("timings".into(), json!({ "solve_seconds": solve_secs, "simulate_seconds": sim_secs }));
    }
    let out = format!(
        "paths          {}\nseed           {}\nsampler        {}\nmean field     {}\ncost mean      {}\nstd error      {}\noptimal cost   {}\nz-score        {}\n",
        args.paths,
        seed,
        match kind {
            SamplerKind::Gaussian => "gaussian",
            SamplerKind::Rademacher => "rademacher",
        },
        match mean_field {
            MeanField::Analytic => "analytic",
            MeanField::PopulationCoupling => "population coupling",
        },
        fmt6(res.cost_mean),
        fmt6(res.cost_std_err),
        fmt6(optimal),
        fmt6(z),
    );
    Ok(Outcome {
        code: EXIT_OK,
        text: out,
        report: Value::Object(rep),
    })
}

fn parse_returns(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Parse(format!("returns CSV: {e}")))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            // a non-numeric first record is a header
            Err(_) if i == 0 => continue,
            Err(e) => {
                let line = rec.position().map_or(0, |p| p.line());
                return Err(CliError::Parse(format!("returns CSV line {line}: {e}")));
            }
        }
    }
    Ok(rows)
}

fn alm_tables(alm: &AlmProblem, sol: &AlmRiccati) -> Result<(String, Value), CliError> {
    let g = alm_gains(sol)?;
    let mut s = format!(
        "{:>3} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
        "k", "Sx", "Tx", "Sxy", "Txy", "Sy", "Ty"
    );
    for k in 0..=alm.horizon {
        let cells: Vec<String> = [sol.sx[k], sol.tx[k], sol.sxy[k], sol.txy[k], sol.sy[k], sol.ty[k]]
            .iter()
            .map(|v| format!("{:>12}", fmt6(*v)))
            .collect();
        s.push_str(&format!("{k:>3} {}\n", cells.join(" ")));
    }
    let row = |v: &[f64]| v.iter().map(|x| format!("{:>11}", fmt6(*x))).collect::<Vec<_>>().join(" ");
    for (k, gk) in g.iter().enumerate() {
        s.push_str(&format!("Ox_{k}     {}\n", row(&gk.ox)));
        s.push_str(&format!("Ox_bar_{k} {}\n", row(&gk.ox_bar)));
        s.push_str(&format!("Oy_{k}     {}\n", row(&gk.oy)));
        s.push_str(&format!("Oy_bar_{k} {}\n", row(&gk.oy_bar)));
    }
    let value = json!({
        "Sx": sol.sx, "Tx": sol.tx, "Sxy": sol.sxy, "Txy": sol.txy, "Sy": sol.sy, "Ty": sol.ty,
        "gains": g,
    });
    Ok((s, value))
}

pub fn cmd_alm(args: &AlmArgs) -> Result<Outcome, CliError> {
    let (alm, digest_hex, source) = match (&args.alm, &args.returns) {
        (Some(path), _) => {
            let text = read_input(path)?;
            (parse_alm(&text)?, digest(text.as_bytes()), "alm")
        }
        (None, Some(path)) => {
            let text = read_input(path)?;
            let rows = parse_returns(&text)?;
            let mode = match args.moments {
                MomentArg::Pooled => MomentEstimation::Pooled,
                MomentArg::PerStep => MomentEstimation::PerStep,
            };
            let alm = alm_from_returns(&rows, args.horizon, mode, args.a, args.f, args.r_scale, args.q_n, args.q_bar_n)?;
            (alm, digest(text.as_bytes()), "returns")
        }
        (None, None) => return Err(CliError::Validation("give an ALM file or --returns".into())),
    };
    let mut rep = header("alm", Some(&digest_hex));
    rep.insert("source".into(), json!(source));
    let validation = validate_alm(&alm);
    if !validation.ok {
        return Ok(rejected(rep, &validation));
    }
    rep.insert("validation".into(), json!(validation));
    if source == "returns" {
        rep.insert(
            "estimated_moments".into(),
            json!({
                "mean_excess": alm.mean_excess.iter().map(|v| v.as_slice().to_vec()).collect::<Vec<_>>(),
                "cov_excess": alm.cov_excess.iter().map(mflq_core::io::matrix_to_rows).collect::<Vec<_>>(),
            }),
        );
    }
    let init = load_moments(args.init.as_deref(), 1)?;
    let sol = solve_alm_riccati(&alm)?;
    let (mut out, tables) = alm_tables(&alm, &sol)?;
    let value = alm_optimal_value(&sol, &init);
    let (ex0, ey0) = (init.mean_x[0], init.mean_y[0]);
    let equity = expected_terminal_equity(&alm, &sol, ex0, ey0)?;
    let (ex, ey) = alm_expected_means(&alm, &sol, ex0, ey0)?;
    out.push_str(&format!("optimal value             {}\n", fmt6(value)));
    out.push_str(&format!("expected terminal equity  {}\n", fmt6(equity)));
    rep.insert("riccati".into(), tables);
    rep.insert("optimal_value".into(), json!(value));
    rep.insert("expected_terminal_equity".into(), json!(equity));
    rep.insert("expected_wealth".into(), json!(ex));
    rep.insert("expected_liability".into(), json!(ey));
    Ok(Outcome {
        code: EXIT_OK,
        text: out,
        report: Value::Object(rep),
    })
}

struct Compared {
    computed: Vec<f64>,
    reference: Vec<f64>,
}

impl Compared {
    fn errors(&self) -> Vec<f64> {
        self.computed.iter().zip(&self.reference).map(|(a, b)| (a - b).abs()).collect()
    }

    fn json(&self) -> Value {
        json!({ "computed": self.computed, "reference": self.reference, "abs_error": self.errors() })
    }
}

/// Side-by-side reproduction of the three-period example.
pub fn example_text() -> Result<(String, Value), CliError> {
    let alm = parse_alm(EXAMPLE_ALM)?;
    let sol = solve_alm_riccati(&alm)?;
    let g = alm_gains(&sol)?;

    let mut s = String::from("three-period asset-liability example\n\n");
    let mut values = Map::new();
    s.push_str(&format!(
        "{:<5} {:>3} {:>12} {:>12} {:>12}\n",
        "", "k", "computed", "reference", "abs error"
    ));
    for (name, computed, reference) in [
        ("Sx", &sol.sx, &reference::SX),
        ("Sxy", &sol.sxy, &reference::SXY),
        ("Sy", &sol.sy, &reference::SY),
    ] {
        let c = Compared {
            computed: computed.clone(),
            reference: reference.to_vec(),
        };
        for (k, e) in c.errors().iter().enumerate() {
            s.push_str(&format!(
                "{name:<5} {k:>3} {:>12} {:>12} {:>12}\n",
                fmt6(c.computed[k]),
                fmt6(c.reference[k]),
                fmt6(*e)
            ));
        }
        values.insert(name.into(), c.json());
    }
    s.push('\n');
    for (name, v) in [("Tx", &sol.tx), ("Txy", &sol.txy), ("Ty", &sol.ty)] {
        let cells: Vec<String> = v.iter().map(|x| fmt6(*x)).collect();
        s.push_str(&format!("{name:<5} {}\n", cells.join("  ")));
        values.insert(name.into(), json!(v));
    }

    s.push('\n');
    let mut gain_rows = Map::new();
    for (name, reference) in [("Ox", &reference::OX), ("Oy", &reference::OY)] {
        for k in 0..alm.horizon {
            let computed = if name == "Ox" { &g[k].ox } else { &g[k].oy };
            let c = Compared {
                computed: computed.clone(),
                reference: reference[k].to_vec(),
            };
            let fmt_row = |v: &[f64]| v.iter().map(|x| format!("{:>10}", fmt6(*x))).collect::<Vec<_>>().join(" ");
            s.push_str(&format!("{name}_{k} computed  {}\n", fmt_row(&c.computed)));
            s.push_str(&format!("{name}_{k} reference {}\n", fmt_row(&c.reference)));
            s.push_str(&format!("{name}_{k} abs error {}\n", fmt_row(&c.errors())));
            gain_rows.insert(format!("{name}_{k}"), c.json());
        }
    }

    let init = InitialMoments::standard(1);
    let value = alm_optimal_value(&sol, &init);
    let coef_x = expected_terminal_equity(&alm, &sol, 1.0, 0.0)?;
    let coef_y = expected_terminal_equity(&alm, &sol, 0.0, 1.0)?;
    s.push_str(&format!("\noptimal value at unit variances, zero means  {}\n", fmt6(value)));
    s.push_str(&format!(
        "E[x_3 - y_3] = {} E[zeta_x] {} {} E[zeta_y]\n",
        fmt6(coef_x),
        if coef_y < 0.0 { "-" } else { "+" },
        fmt6(coef_y.abs())
    ));
    let report = json!({
        "values": values,
        "gains": gain_rows,
        "optimal_value_unit_variance": value,
        "expected_terminal_equity": { "coef_mean_x": coef_x, "coef_mean_y": coef_y },
    });
    Ok((s, report))
}

pub fn cmd_example(_args: &ExampleArgs) -> Result<Outcome, CliError> {
    let mut rep = header("example", Some(&digest(EXAMPLE_ALM.as_bytes())));
    let (text, body) = example_text()?;
    if let Value::Object(m) = body {
        rep.extend(m);
    }
    Ok(Outcome {
        code: EXIT_OK,
        text,
        report: Value::Object(rep),
    })
}
