use lgw_core::activity::{
    activity, activity_numeric, activity_single_mode, activity_two_mode, preset_activity,
    spectral_activity, OptimizerConfig, Preset, Witness,
};
use lgw_core::distillation::{
    activity_distillation_demo, process_two_copies_single_mode, work_swap_demo,
};
use lgw_core::fock::{
    apply_kraus_channel, fock_postselect_demo, fock_relative_entropy_gaussian,
    fock_single_mode_activity, from_gaussian, gaussian_postselect, phase_space_loss_channel,
    thermal_loss_kraus, FockDensity,
};
use lgw_core::free::{convex_combine, is_free_cm, TOL_FREE};
use lgw_core::gaussian::{partial_trace, relative_entropy, von_neumann_entropy};
use lgw_core::sampling::{
    random_cm, random_free_cm, random_orthosymplectic, random_state, random_symplectic,
};
use lgw_core::symplectic::{bloch_messiah, direct_sum, select_modes, williamson};
use lgw_core::work::{extractable_work, extraction_protocol, is_work_free, quadratic_work};
use lgw_core::{CovarianceMatrix, GaussianState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::record::{matrix, nums, Builder, ResultRecord};
use crate::state::{read_state_file, Input};
use crate::{
    Cli, CliError, Command, Common, Demo, Property, EXIT_FAILURE, EXIT_NOT_CERTIFIED, EXIT_OK,
};

type Res = Result<(ResultRecord, i32), CliError>;

/// Demo reference values and their pinned tolerance.
const DISTILL_REFERENCE: (f64, f64) = (0.7621, 1.0019);
const DISTILL_TOL: f64 = 2e-3;

pub fn dispatch(cli: &Cli) -> Res {
    let c = &cli.common;
    if let Some(t) = c.tol {
        if !t.is_finite() || t < 0.0 {
            return Err(CliError::Validation(format!(
                "--tol {t} must be a finite nonnegative number"
            )));
        }
    }
    if c.fock_dim < 2 {
        return Err(CliError::Validation(format!(
            "--fock-dim {} must be at least 2",
            c.fock_dim
        )));
    }
    match &cli.command {
        Command::Activity { state } => activity_cmd(c, state),
        Command::Work { state } => work_cmd(c, state),
        Command::Entropy { state } => entropy_cmd(c, state),
        Command::Relent {
            state,
            reference,
            fock_check,
        } => relent_cmd(c, state, reference, *fock_check),
        Command::Decompose { state } => decompose_cmd(c, state),
        Command::Freecheck { state } => freecheck_cmd(c, state),
        Command::Channel {
            state,
            eta,
            nbar_tau,
            fock,
        } => channel_cmd(c, state, *eta, *nbar_tau, *fock),
        Command::Demo { which } => match which {
            Demo::DistillActivity => distill_activity_cmd(c),
            Demo::DistillWork { state_a, state_b } => distill_work_cmd(c, state_a, state_b),
            Demo::FockPostselect => fock_postselect_cmd(c),
        },
        Command::Sweep { property, count } => sweep_cmd(c, *property, *count),
    }
}

/// Reads a state and records its document among the inputs.
fn load(b: &mut Builder, name: &str, arg: &str) -> Result<Input, CliError> {
    let doc = read_state_file(arg)?;
    b.input(name, &doc);
    doc.to_input()
}

fn optimizer(c: &Common) -> OptimizerConfig {
    OptimizerConfig {
        restarts: c.restarts,
        seed: c.seed,
        ..OptimizerConfig::default()
    }
}

fn activity_cmd(c: &Common, state: &str) -> Res {
    let mut b = Builder::default();
    let input = load(&mut b, "state", state)?;
    b.input("restarts", c.restarts)
        .input("tol", c.tol)
        .input("fock_dim", c.fock_dim);
    let g = match input {
        Input::Fock(n) => {
            let rho = FockDensity::fock(n, c.fock_dim)?;
            b.scalar("value", fock_single_mode_activity(&rho)?)
                .scalar(
                    "closed_form",
                    preset_activity(Preset::Fock { n: n as i64 })?,
                )
                .out("method", json!("fock"))
                .out("certified", json!(true));
            return Ok((b.finish("activity", c.seed), EXIT_OK));
        }
        Input::Gaussian(g) => g,
    };
    let rep = activity(&g, &optimizer(c))?;
    let spectral = spectral_activity(&g)?;
    let mut certified = rep.certified;
    if let Some(t) = c.tol {
        certified &= (rep.value - spectral).abs() <= t;
    }
    b.scalar("value", rep.value)
        .scalar("spectral_value", spectral)
        .out("certified", json!(certified))
        .out("closest_free", matrix(rep.closest_free.matrix()));
    match &rep.witness {
        Witness::Thermal { nbar } => {
            b.out("method", json!("single_mode"))
                .scalar("witness_nbar", *nbar);
        }
        Witness::TwoMode {
            b: bs,
            theta,
            delta_phi,
        } => {
            b.out("method", json!("two_mode"))
                .out("witness_b", nums(bs))
                .scalar("witness_theta", *theta)
                .scalar("witness_delta_phi", *delta_phi);
        }
        Witness::Numeric {
            nu, evaluations, ..
        } => {
            b.out("method", json!("numeric"))
                .out("witness_nu", nums(nu))
                .out("evaluations", json!(evaluations));
        }
    }
    let code = if certified {
        EXIT_OK
    } else {
        EXIT_NOT_CERTIFIED
    };
    Ok((b.finish("activity", c.seed), code))
}

fn work_cmd(c: &Common, state: &str) -> Res {
    let mut b = Builder::default();
    let g = load(&mut b, "state", state)?.gaussian("work")?;
    let w = extractable_work(&g)?;
    let p = extraction_protocol(&g)?;
    b.scalar("quadratic", w.quadratic)
        .scalar("displacement", w.displacement)
        .scalar("total", w.total)
        .out(
            "protocol_displacement",
            nums(p.displacement_step.as_slice()),
        )
        .out("protocol_passive", matrix(p.passive_step.matrix()))
        .out("protocol_squeezers", nums(&p.squeezer_step))
        .out("final_nu", nums(&p.final_cm.nu))
        .out("final_covariance", matrix(p.final_cm.cm.matrix()));
    Ok((b.finish("work", c.seed), EXIT_OK))
}

fn entropy_cmd(c: &Common, state: &str) -> Res {
    let mut b = Builder::default();
    match load(&mut b, "state", state)? {
        Input::Fock(n) => {
            b.input("fock_dim", c.fock_dim);
            b.scalar("entropy", FockDensity::fock(n, c.fock_dim)?.entropy());
        }
        Input::Gaussian(g) => {
            b.scalar("entropy", von_neumann_entropy(&g)?)
                .out("symplectic_eigenvalues", nums(&g.symplectic_eigenvalues()));
        }
    }
    Ok((b.finish("entropy", c.seed), EXIT_OK))
}

fn relent_cmd(c: &Common, state: &str, reference: &str, fock_check: bool) -> Res {
    let mut b = Builder::default();
    let a = load(&mut b, "state", state)?.gaussian("relent")?;
    let r = load(&mut b, "reference", reference)?.gaussian("relent")?;
    b.scalar("value", relative_entropy(&a, &r)?);
    if fock_check {
        b.input("fock_dim", c.fock_dim);
        let rho = from_gaussian(&a, c.fock_dim)?;
        b.scalar("fock_value", fock_relative_entropy_gaussian(&rho, &r)?)
            .scalar("fock_trace_leak", 1.0 - rho.trace());
    }
    Ok((b.finish("relent", c.seed), EXIT_OK))
}

fn decompose_cmd(c: &Common, state: &str) -> Res {
    let mut b = Builder::default();
    let g = load(&mut b, "state", state)?.gaussian("decompose")?;
    let w = williamson(g.covariance())?;
    let bm = bloch_messiah(&w.s)?;
    b.out("williamson_nu", nums(&w.nu))
        .out("williamson_s", matrix(w.s.matrix()))
        .scalar(
            "williamson_residual",
            (w.reconstruct() - g.covariance()).norm(),
        )
        .out("bloch_messiah_o1", matrix(bm.o1.matrix()))
        .out("bloch_messiah_r", nums(&bm.r))
        .out("bloch_messiah_o2", matrix(bm.o2.matrix()))
        .scalar(
            "bloch_messiah_residual",
            (bm.reconstruct() - w.s.matrix()).norm(),
        );
    Ok((b.finish("decompose", c.seed), EXIT_OK))
}

fn freecheck_cmd(c: &Common, state: &str) -> Res {
    let mut b = Builder::default();
    let g = load(&mut b, "state", state)?.gaussian("freecheck")?;
    let tol = c.tol.unwrap_or(TOL_FREE);
    b.input("tol", tol);
    let f = is_free_cm(g.covariance(), tol)?;
    b.out("spectral_free", json!(f.spectral_free))
        .out("structural_form", json!(f.structural_form))
        .out("work_free", json!(is_work_free(g.cm(), tol)?))
        .scalar("gap", f.gap);
    Ok((b.finish("freecheck", c.seed), EXIT_OK))
}

fn channel_cmd(c: &Common, state: &str, eta: f64, nbar_tau: f64, fock: bool) -> Res {
    let mut b = Builder::default();
    let input = load(&mut b, "state", state)?;
    b.input("eta", eta)
        .input("nbar_tau", nbar_tau)
        .input("fock", fock);
    if !fock {
        let g = input.gaussian("channel")?;
        let out = phase_space_loss_channel(&g, eta, nbar_tau)?;
        b.out("displacement", nums(out.displacement().as_slice()))
            .out("covariance", matrix(out.covariance()));
        return Ok((b.finish("channel", c.seed), EXIT_OK));
    }
    b.input("fock_dim", c.fock_dim);
    let (rho, gaussian) = match input {
        Input::Fock(n) => (FockDensity::fock(n, c.fock_dim)?, None),
        Input::Gaussian(g) => {
            if g.modes() != 1 {
                return Err(CliError::Validation(
                    "the Fock channel takes a single mode".into(),
                ));
            }
            (from_gaussian(&g, c.fock_dim)?, Some(g))
        }
    };
    let kraus = thermal_loss_kraus(eta, nbar_tau, c.fock_dim, c.fock_dim)?;
    let out = apply_kraus_channel(&rho, &kraus)?;
    let (d, cm) = out.output.moments()?;
    b.out("populations", nums(&out.output.populations()))
        .scalar("trace", out.output.trace())
        .scalar("input_trace_leak", 1.0 - rho.trace())
        .scalar("completeness_deficit", out.completeness_deficit)
        .out("displacement", nums(d.as_slice()))
        .out("covariance", matrix(&cm));
    if let Some(g) = gaussian {
        let want = phase_space_loss_channel(&g, eta, nbar_tau)?;
        let dev = (d - want.displacement())
            .amax()
            .max((cm - want.covariance()).amax());
        b.scalar("phase_space_deviation", dev);
    }
    Ok((b.finish("channel", c.seed), EXIT_OK))
}

fn distill_activity_cmd(c: &Common) -> Res {
    let mut b = Builder::default();
    let out = activity_distillation_demo()?;
    let ok = (out.input_value - DISTILL_REFERENCE.0).abs() < DISTILL_TOL
        && (out.output_value - DISTILL_REFERENCE.1).abs() < DISTILL_TOL;
    b.scalar("input_activity", out.input_value)
        .scalar("output_activity", out.output_value)
        .out(
            "reference",
            nums(&[DISTILL_REFERENCE.0, DISTILL_REFERENCE.1]),
        )
        .out("within_tolerance", json!(ok))
        .out("output_covariance", matrix(out.output_state.covariance()));
    Ok((
        b.finish("demo distill-activity", c.seed),
        if ok { EXIT_OK } else { EXIT_FAILURE },
    ))
}

fn single_mode_cm(b: &mut Builder, name: &str, arg: &str) -> Result<CovarianceMatrix, CliError> {
    let g = load(b, name, arg)?.gaussian("demo distill-work")?;
    if g.modes() != 1 {
        return Err(CliError::Validation(format!(
            "`{name}` must be a single-mode state"
        )));
    }
    Ok(g.cm().clone())
}

fn distill_work_cmd(c: &Common, a: &str, bb: &str) -> Res {
    let mut b = Builder::default();
    let ga = single_mode_cm(&mut b, "state_a", a)?;
    let gb = single_mode_cm(&mut b, "state_b", bb)?;
    let out = work_swap_demo(ga.matrix(), gb.matrix())?;
    let expected = quadratic_work(ga.matrix())? - quadratic_work(gb.matrix())?;
    b.scalar("input_work", out.input_value)
        .scalar("output_work", out.output_value)
        .scalar("gain", out.output_value - out.input_value)
        .scalar("expected_gain", expected);
    Ok((b.finish("demo distill-work", c.seed), EXIT_OK))
}

fn fock_postselect_cmd(c: &Common) -> Res {
    let mut b = Builder::default();
    let out = fock_postselect_demo()?;
    b.scalar("probability", out.probability)
        .scalar("fidelity", out.fidelity)
        .scalar("input_activity", out.input_activity)
        .scalar("output_activity", out.output_activity)
        .scalar("activity_gain", out.activity_gain);
    Ok((b.finish("demo fock-postselect", c.seed), EXIT_OK))
}

struct Sweep {
    name: &'static str,
    worst: f64,
    tol: f64,
}

fn sweep_cmd(c: &Common, property: Property, count: usize) -> Res {
    let mut b = Builder::default();
    b.input("property", format!("{property:?}").to_lowercase())
        .input("count", count)
        .input("tol", c.tol)
        .input("restarts", c.restarts);
    let all = property == Property::All;
    let mut results = Vec::new();
    // one stream per property so each sweep is reproducible on its own
    let rng = |k: u64| ChaCha8Rng::seed_from_u64(c.seed ^ (k << 56));
    if all || property == Property::Work {
        results.push(sweep_work(&mut rng(1), count, c.tol.unwrap_or(1e-9))?);
    }
    if all || property == Property::Decompose {
        results.push(sweep_decompose(&mut rng(2), count, c.tol.unwrap_or(1e-9))?);
    }
    if all || property == Property::Nogo {
        results.push(sweep_nogo(&mut rng(3), count, c.tol.unwrap_or(1e-9))?);
    }
    if all || property == Property::Free {
        results.push(sweep_free(&mut rng(4), count, c.tol.unwrap_or(1e-8))?);
    }
    if all || property == Property::Activity {
        results.push(sweep_activity(
            &mut rng(5),
            count,
            c.tol.unwrap_or(1e-5),
            &optimizer(c),
        )?);
    }
    let mut ok = true;
    for r in &results {
        let pass = r.worst < r.tol;
        ok &= pass;
        b.scalar(&format!("{}_max_violation", r.name), r.worst)
            .scalar(&format!("{}_tol", r.name), r.tol)
            .out(&format!("{}_pass", r.name), json!(pass));
    }
    b.out("count", json!(count));
    Ok((
        b.finish("sweep", c.seed),
        if ok { EXIT_OK } else { EXIT_FAILURE },
    ))
}

fn sweep_work(rng: &mut ChaCha8Rng, count: usize, tol: f64) -> Result<Sweep, CliError> {
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let n = rng.gen_range(1..=5);
        let a = random_cm(n, 1.0, 2.0, rng);
        let bcm = random_cm(n, 1.0, 2.0, rng);
        let wa = quadratic_work(a.matrix())?;
        let wb = quadratic_work(bcm.matrix())?;
        worst = worst.max(-wa);
        let p: f64 = rng.gen();
        let mix = convex_combine(&[p, 1.0 - p], &[a.clone(), bcm.clone()])?;
        worst = worst.max(quadratic_work(mix.matrix())? - p * wa - (1.0 - p) * wb);
        if n > 1 {
            let k = rng.gen_range(1..n);
            let st = GaussianState::centered(a.clone());
            let left: Vec<usize> = (0..k).collect();
            let right: Vec<usize> = (k..n).collect();
            let parts = quadratic_work(partial_trace(&st, &left)?.covariance())?
                + quadratic_work(partial_trace(&st, &right)?.covariance())?;
            worst = worst.max(parts - wa);
        }
        let o = random_orthosymplectic(n, rng);
        worst = worst.max((quadratic_work(a.transform(o.matrix()).matrix())? - wa).abs());
        worst =
            worst.max((quadratic_work(&direct_sum(&[a.matrix(), bcm.matrix()]))? - wa - wb).abs());
    }
    Ok(Sweep {
        name: "work",
        worst,
        tol,
    })
}

fn sweep_decompose(rng: &mut ChaCha8Rng, count: usize, tol: f64) -> Result<Sweep, CliError> {
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let n = rng.gen_range(1..=5);
        let cm = random_cm(n, 1.0, 3.0, rng);
        let w = williamson(cm.matrix())?;
        worst = worst.max((w.reconstruct() - cm.matrix()).norm());
        let (s, _) = random_symplectic(n, 1.0, rng);
        let bm = bloch_messiah(&s)?;
        worst = worst.max((bm.reconstruct() - s.matrix()).norm());
    }
    Ok(Sweep {
        name: "decompose",
        worst,
        tol,
    })
}

fn sweep_nogo(rng: &mut ChaCha8Rng, count: usize, tol: f64) -> Result<Sweep, CliError> {
    use std::f64::consts::PI;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let g = random_cm(1, 1.5, 2.0, rng);
        let theta = rng.gen_range(0.0..PI);
        let phi = [0; 4].map(|_| rng.gen_range(-PI..PI));
        let a_in = activity_single_mode(&GaussianState::centered(g.clone()))?.value;
        let w_in = quadratic_work(g.matrix())?;
        let (g1, g2) = process_two_copies_single_mode(g.matrix(), theta, phi)?;
        for out in [g1, g2] {
            worst = worst
                .max(activity_single_mode(&GaussianState::centered(out.clone()))?.value - a_in);
            worst = worst.max(quadratic_work(out.matrix())? - w_in);
        }
    }
    Ok(Sweep {
        name: "nogo",
        worst,
        tol,
    })
}

fn sweep_free(rng: &mut ChaCha8Rng, count: usize, tol: f64) -> Result<Sweep, CliError> {
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let n = rng.gen_range(2..=5);
        let a = random_free_cm(n, 2.0, rng);
        let bcm = random_free_cm(n, 2.0, rng);
        let p: f64 = rng.gen();
        let k = rng.gen_range(0..n);
        let meas = CovarianceMatrix::thermal(&[2.0 * rng.gen::<f64>()]);
        let produced = [
            convex_combine(&[p, 1.0 - p], &[a.clone(), bcm.clone()])?.into_matrix(),
            direct_sum(&[a.matrix(), bcm.matrix()]),
            select_modes(a.matrix(), &[k]),
            gaussian_postselect(&GaussianState::centered(a), &[k], &meas)?
                .covariance()
                .clone(),
        ];
        for m in &produced {
            worst = worst.max(is_free_cm(m, tol)?.gap);
        }
    }
    Ok(Sweep {
        name: "free",
        worst,
        tol,
    })
}

fn sweep_activity(
    rng: &mut ChaCha8Rng,
    count: usize,
    tol: f64,
    cfg: &OptimizerConfig,
) -> Result<Sweep, CliError> {
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let st = random_state(2, 1.2, 2.0, 1.0, rng);
        worst =
            worst.max((activity_two_mode(&st)?.value - activity_numeric(&st, cfg)?.value).abs());
    }
    Ok(Sweep {
        name: "activity",
        worst,
        tol,
    })
}
