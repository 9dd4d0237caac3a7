//! Single-scenario closed-loop inspection: integrates one therapy and emits
//! the time series, the outcome labels and a small plot.

use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mixcert_core::dynamics::{ControlInput, StateVector};
use mixcert_core::feedback::{ParameterizedLaw, ZeroLaw};
use mixcert_core::protocol::{extract_labels, simulate_closed_loop, Trajectory};
use mixcert_core::sampling::draw_model_parameters;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::plot;
use crate::util::{fmt_f64, subseed};

#[derive(Debug, Default, Clone)]
pub struct SimulateOptions {
    /// Override of the configured initial state.
    pub x0: Option<StateVector>,
    /// Draw the patient coefficients at this uncertainty level instead of
    /// running the nominal patient.
    pub zeta: Option<f64>,
    /// Force zero input everywhere (drug-free flow).
    pub zero_feedback: bool,
}

pub fn run(cfg: &RunConfig, root: &Path, opts: &SimulateOptions) -> CliResult<()> {
    let nominal = cfg.load_nominal()?;
    cfg.validate(&nominal)?;
    let mut manifest = ManifestBuilder::new("simulate", cfg, &super::command_dir(root, "simulate"))?;
    manifest.phase("simulate");

    let x0 = opts.x0.unwrap_or(cfg.simulate.x0);
    if !x0.is_valid() {
        return Err(CliError::Config(format!("initial state must be finite and nonnegative: {x0:?}")));
    }
    let params = match opts.zeta {
        Some(zeta) if zeta > 0.0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(cfg.seed, "simulate-patient"));
            draw_model_parameters(zeta, &nominal, &mut rng)
        }
        _ => *nominal.params(),
    };
    let ctrl = cfg.simulate.control;
    let law_cfg = cfg.law.to_core(&nominal, &cfg.labels);
    let protocol = cfg.protocol.to_core();

    let traj = if opts.zero_feedback {
        simulate_closed_loop(&x0, &params, &ctrl, &protocol, &ZeroLaw)
    } else {
        let law = ParameterizedLaw { ctrl, cfg: &law_cfg, nominal: &nominal };
        simulate_closed_loop(&x0, &params, &ctrl, &protocol, &law)
    }?;
    let labels = extract_labels(&traj, &cfg.labels.to_core(), law_cfg.max_rates());

    manifest.phase("write");
    manifest.write_output("trajectory.csv", &trajectory_csv(&traj))?;
    let labels_json = serde_json::json!({
        "x0": x0,
        "zeta": opts.zeta,
        "zero_feedback": opts.zero_feedback,
        "labels": labels,
        "min_circulating": traj.min_circulating,
    });
    manifest.write_output("labels.json", serde_json::to_string_pretty(&labels_json)?.as_bytes())?;
    manifest.write_output("trajectory.svg", trajectory_svg(&traj).as_bytes())?;
    manifest.finish()
}

fn trajectory_csv(traj: &Trajectory) -> Vec<u8> {
    let mut out = String::from("t,T,N,L,C,M,I,vM,vI,vL\n");
    for (i, (t, state)) in traj.times.iter().zip(traj.states.iter()).enumerate() {
        // Input held from this instant; the final row has nothing ahead.
        let input = traj.inputs.get(i).copied().unwrap_or_else(ControlInput::zero);
        let mut fields = vec![fmt_f64(*t)];
        fields.extend(state.to_array().iter().map(|v| fmt_f64(*v)));
        fields.extend(input.to_array().iter().map(|v| fmt_f64(*v)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn trajectory_svg(traj: &Trajectory) -> String {
    let log10 = |v: f64| v.max(1e-3).log10();
    let series: Vec<(String, Vec<(f64, f64)>)> = [
        ("log10 T", 0usize),
        ("log10 N", 1),
        ("log10 L", 2),
        ("log10 C", 3),
    ]
    .iter()
    .map(|(name, idx)| {
        (
            name.to_string(),
            traj.times
                .iter()
                .zip(traj.states.iter())
                .map(|(t, s)| (*t, log10(s.to_array()[*idx])))
                .collect(),
        )
    })
    .collect();
    plot::line_chart("Closed-loop populations", "t [day]", "log10 count", &series)
}
