use mflq_core::alm::lift_residual;
use mflq_core::io::{AlmDoc, ProblemDoc};
use mflq_core::oracle::{policy_controls, tree_laws, InitialLaw, DENSE_LIMIT, TREE_LIMIT};
use mflq_core::random::{random_alm, random_moments, random_problem};
use mflq_core::riccati::{solution_deviation, solve_p_form_with, equivalence_residual, PxyBoundary};
use mflq_core::{
    assemble_quadratic, brute_force_optimal, build_policy, build_tree, check_theta2_psd, optimal_cost,
    solve_riccati, solve_riccati_multinoise, validate_problem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::args::{BoundaryArg, VerifyArgs};
use crate::report::{fmt6, header};
use crate::{CliError, Outcome, EXIT_OK, EXIT_VERIFICATION};

pub const EQUIVALENCE_TOL: f64 = 1e-9;
pub const ORACLE_TOL: f64 = 1e-8;
pub const REDUCTION_TOL: f64 = 1e-12;

fn parse_dims(s: &str) -> Result<(usize, usize, usize), CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Validation(format!("--max-dims must be \"n,m,N\" with positive integers, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<usize> = parts.iter().map(|p| p.parse::<usize>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    if v.contains(&0) {
        return Err(bad());
    }
    Ok((v[0], v[1], v[2]))
}

/// Controls and `leaves · m` of the largest tree the battery may build.
fn worst_tree(n: usize, m: usize, big_n: usize) -> Option<(usize, usize)> {
    let roots = 4usize.checked_mul(n)?;
    let mut level = roots;
    let mut nodes = 0usize;
    for _ in 0..big_n {
        nodes = nodes.checked_add(level)?;
        level = level.checked_mul(4)?;
    }
    Some((nodes.checked_mul(m)?, level.checked_mul(m)?))
}

#[derive(Default)]
struct Worst {
    equivalence: f64,
    reduction: f64,
    oracle_cost: f64,
    oracle_controls: f64,
    alm_lift: f64,
    theta2_min_eig: f64,
}

struct Failure {
    instance: usize,
    check: &'static str,
    residual: f64,
    tolerance: f64,
    problem: Value,
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let (max_n, max_m, max_big_n) = parse_dims(&args.max_dims)?;
    match worst_tree(max_n, max_m, max_big_n) {
        Some((controls, leaves)) if controls <= DENSE_LIMIT && leaves <= TREE_LIMIT => {}
        _ => {
            return Err(CliError::Validation(format!(
                "--max-dims {} exceeds the scenario-tree guard ({DENSE_LIMIT} controls, {TREE_LIMIT} leaf controls)",
                args.max_dims
            )))
        }
    }
    let boundary = match args.pxy_boundary {
        BoundaryArg::Consistent => PxyBoundary::Consistent,
        BoundaryArg::NegQ => PxyBoundary::NegQ,
    };

    let mut worst = Worst {
        theta2_min_eig: f64::INFINITY,
        ..Worst::default()
    };
    let mut failures: Vec<Failure> = Vec::new();
    let mut psd_count = 0usize;

    for i in 0..args.instances {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(i as u64);
        let n = rng.random_range(1..=max_n);
        let m = rng.random_range(1..=max_m);
        let big_n = rng.random_range(1..=max_big_n);
        let spec = random_problem(&mut rng, n, m, big_n);
        let doc = || serde_json::to_value(ProblemDoc::from_spec(&spec)).expect("serializable");
        let mut fail = |check: &'static str, residual: f64, tolerance: f64, problem: Value| {
            failures.push(Failure {
                instance: i,
                check,
                residual,
                tolerance,
                problem,
            })
        };
        let validation = validate_problem(&spec);
        if !validation.ok {
            fail("validation", f64::NAN, 0.0, doc());
            continue;
        }

        let st = solve_riccati(&spec)?;
        let p = solve_p_form_with(&spec, boundary)?;
        let r = equivalence_residual(&p, &st);
        worst.equivalence = worst.equivalence.max(r);
        if !(r < EQUIVALENCE_TOL) {
            fail("equivalence", r, EQUIVALENCE_TOL, doc());
        }

        let multi = spec.to_multinoise();
        let general = solve_riccati_multinoise(&multi)?;
        let r = solution_deviation(&st, &general);
        worst.reduction = worst.reduction.max(r);
        if !(r <= REDUCTION_TOL) {
            fail("multinoise_reduction", r, REDUCTION_TOL, doc());
        }

        let init = InitialLaw::from_moments(&random_moments(&mut rng, n));
        let tree = build_tree(&multi, &tree_laws(&multi), &init)?;
        let quad = assemble_quadratic(&tree, &multi);
        let (psd, lambda_min) = check_theta2_psd(&quad);
        worst.theta2_min_eig = worst.theta2_min_eig.min(lambda_min);
        if psd {
            psd_count += 1;
        } else {
            fail("theta2_psd", lambda_min, 0.0, doc());
        }
        match brute_force_optimal(&quad) {
            Ok((u, j)) => {
                let j_riccati = optimal_cost(&general, &init.moments());
                let r = (j - j_riccati).abs() / (1.0 + j.abs());
                worst.oracle_cost = worst.oracle_cost.max(r);
                if !(r <= ORACLE_TOL) {
                    fail("oracle_cost", r, ORACLE_TOL, doc());
                }
                let policy = build_policy(&general)?;
                let r = (&u - policy_controls(&tree, &quad, &policy)).amax();
                worst.oracle_controls = worst.oracle_controls.max(r);
                if !(r <= ORACLE_TOL) {
                    fail("oracle_controls", r, ORACLE_TOL, doc());
                }
            }
            Err(e) => fail("oracle_cost", f64::NAN, ORACLE_TOL, json!({ "error": e.to_string(), "problem": doc() })),
        }

        let alm = random_alm(&mut rng, m, big_n);
        let r = lift_residual(&alm)?;
        worst.alm_lift = worst.alm_lift.max(r);
        if !(r <= REDUCTION_TOL) {
            let alm_doc = serde_json::to_value(AlmDoc::from_problem(&alm)).expect("serializable");
            fail("alm_lift", r, REDUCTION_TOL, alm_doc);
        }
    }

    let mut rep = header("verify", None);
    rep.insert("instances".into(), json!(args.instances));
    rep.insert("seed".into(), json!(args.seed));
    rep.insert("max_dims".into(), json!([max_n, max_m, max_big_n]));
    rep.insert(
        "pxy_boundary".into(),
        json!(match boundary {
            PxyBoundary::Consistent => "consistent",
            PxyBoundary::NegQ => "neg_q",
        }),
    );
    rep.insert("passed".into(), json!(failures.is_empty()));
    let theta2 = if args.instances == 0 { Value::Null } else { json!(worst.theta2_min_eig) };
    if args.instances > 0 {
        rep.insert(
            "worst".into(),
            json!({
                "equivalence": worst.equivalence,
                "multinoise_reduction": worst.reduction,
                "oracle_cost": worst.oracle_cost,
                "oracle_controls": worst.oracle_controls,
                "alm_lift": worst.alm_lift,
                "theta2_min_eigenvalue": theta2,
            }),
        );
        rep.insert("theta2_psd".into(), json!({ "psd": psd_count, "total": args.instances }));
    }
    rep.insert(
        "failures".into(),
        Value::Array(
            failures
                .iter()
                .map(|f| {
                    json!({
                        "instance": f.instance,
                        "check": f.check,
                        "residual": if f.residual.is_finite() { json!(f.residual) } else { Value::Null },
                        "tolerance": f.tolerance,
                        "replay": f.problem,
                    })
                })
                .collect(),
        ),
    );

    let mut s = format!("instances {} seed {} max dims {}\n", args.instances, args.seed, args.max_dims);
    if args.instances > 0 {
        for (name, v, tol) in [
            ("P-form vs S/T", worst.equivalence, EQUIVALENCE_TOL),
            ("vector noise reduction", worst.reduction, REDUCTION_TOL),
            ("oracle cost", worst.oracle_cost, ORACLE_TOL),
            ("oracle controls", worst.oracle_controls, ORACLE_TOL),
            ("ALM lift", worst.alm_lift, REDUCTION_TOL),
        ] {
            s.push_str(&format!("  {name:<24} worst {:>12}  tol {}\n", fmt6(v), fmt6(tol)));
        }
        s.push_str(&format!(
            "  {:<24} {psd_count}/{} (min eigenvalue {})\n",
            "Theta2 PSD",
            args.instances,
            fmt6(worst.theta2_min_eig)
        ));
    }
    for f in &failures {
        s.push_str(&format!("FAILED instance {} {}: residual {}\n", f.instance, f.check, fmt6(f.residual)));
    }
    s.push_str(if failures.is_empty() { "all invariants hold\n" } else { "invariant failures\n" });
    Ok(Outcome {
        code: if failures.is_empty() { EXIT_OK } else { EXIT_VERIFICATION },
        text: s,
        report: serde_json::Value::Object(rep),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_syntax() {
        assert_eq!(parse_dims("2, 3,4").unwrap(), (2, 3, 4));
        assert!(parse_dims("2,3").is_err());
        assert!(parse_dims("0,1,1").is_err());
    }

    #[test]
    fn tree_guard() {
        assert_eq!(worst_tree(1, 1, 1), Some((4, 16)));
        assert!(worst_tree(4, 4, 8).unwrap().0 > DENSE_LIMIT);
    }
}
