use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use serde_json::{json, Value};
use swsync_core::dynamics::{find_limit_cycle, CycleOptions};
use swsync_core::graph::{generate_small_world, ring_lattice};
use swsync_core::msf::{stability_interval, IntervalOptions};
use swsync_core::netsim::{perturbed_initials, simulate_network, sync_verdict, SimOptions, SYNC_TOL, SYNC_WINDOW};
use swsync_core::predictor::predict_from_sigma_max;
use swsync_core::spectral::{esd_histogram, exact_moments, expected_moments, laplacian_spectrum};
use swsync_core::triangle::fit_triangle;
use swsync_core::{Graph, Linearization, MomentSource, MomentVariant, Rossler, SmallWorldParams};

use crate::{to_json, usage, write_file};

#[derive(Args, Debug)]
pub struct ReproArgs {
    /// Target directory (defaults to --out-dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed for every random graph and perturbation.
    #[arg(long)]
    seed: u64,
    /// Realizations averaged for the moment table.
    #[arg(long, default_value_t = 50)]
    samples: u64,
    /// Perturbation half-width for the 512-node runs.
    #[arg(long, default_value_t = 2.0)]
    amplitude: f64,
    /// Perturbation half-width for the 6-ring runs.
    #[arg(long, default_value_t = 0.1)]
    ring_amplitude: f64,
    #[arg(long, default_value_t = 40.0)]
    t_end: f64,
}

fn traced_run(dir: &Path, name: &str, g: &Graph, gamma: f64, amplitude: f64, seed: u64, t_end: f64) -> Result<Value> {
    let init = perturbed_initials(&Rossler::REFERENCE_ANCHOR, amplitude, g.node_count(), seed);
    let opts = SimOptions { t_end, record_nodes: g.node_count() <= 16, ..SimOptions::default() };
    Ok(match simulate_network(g, &Rossler::reference(), gamma, &init, opts) {
        Ok(trace) => {
            write_file(&dir.join(format!("{name}.csv")), &trace.to_csv())?;
            let report = sync_verdict(&trace, SYNC_TOL, SYNC_WINDOW.min(t_end))?;
            json!({"gamma": gamma, "verdict": report.verdict, "final_err": report.final_err, "file": format!("{name}.csv")})
        }
        Err(swsync_core::Error::BlowUp { time }) => {
            json!({"gamma": gamma, "verdict": "not_synchronized", "diverged_at": time})
        }
        Err(e) => return Err(e.into()),
    })
}

pub fn run(a: ReproArgs, out_dir: Option<&Path>) -> Result<()> {
    let dir = a.out.as_deref().or(out_dir).ok_or_else(|| usage("repro needs --out or --out-dir"))?.to_path_buf();
    if a.samples == 0 || !(a.t_end > 0.0) || !(a.amplitude >= 0.0) || !(a.ring_amplitude >= 0.0) {
        return Err(usage("--samples and --t-end must be positive, amplitudes non-negative"));
    }

    let ring = ring_lattice(6, 1)?;
    let ring_spec = laplacian_spectrum(&ring)?;
    write_file(&dir.join("ring6_spectrum.csv"), &ring_spec.to_csv())?;

    let exact = Rossler::reference();
    let frozen = exact.with_linearization(Linearization::FixedZDecay);
    let cycle = find_limit_cycle(&exact, &Rossler::REFERENCE_ANCHOR, CycleOptions::default())?;
    write_file(&dir.join("rossler_cycle.csv"), &cycle.samples.to_csv())?;
    let mut thresholds = serde_json::Map::new();
    for (label, model) in [("exact", exact), ("fixed-z-decay", frozen)] {
        let interval = stability_interval(&model, &cycle, IntervalOptions::default())?;
        write_file(&dir.join(format!("msf_{label}.csv")), &interval.curve.to_csv())?;
        thresholds.insert(label.into(), json!(interval.sigma_max));
    }
    let sigma_max = thresholds["fixed-z-decay"].as_f64().unwrap_or(f64::NAN);

    let literal = fit_triangle(10.0, 114.0, 1431.0)?;
    write_file(&dir.join("fit_literal.csv"), &literal.density_csv(200))?;

    let mut table = String::from("r,q1,q2,q3_paper,q3_corrected,mc_q1,mc_q2,mc_q3\n");
    for r in 1..=10 {
        let r = r as f64;
        let p = expected_moments(3, r, MomentVariant::Paper)?;
        let c = expected_moments(3, r, MomentVariant::Corrected)?;
        let mut mc = [0.0; 3];
        for s in 0..a.samples {
            let g = generate_small_world(&SmallWorldParams::new(512, 3, r, a.seed.wrapping_add(s)))?;
            for (acc, v) in mc.iter_mut().zip(exact_moments(&g)?.raw()) {
                *acc += v / a.samples as f64;
            }
        }
        table.push_str(&format!("{r},{},{},{},{},{},{},{}\n", p.q1, p.q2, p.q3, c.q3, mc[0], mc[1], mc[2]));
    }
    write_file(&dir.join("moments_table.csv"), &table)?;

    let mut esd = Vec::new();
    for r in [2.0, 4.0, 8.0] {
        let params = SmallWorldParams::new(512, 3, r, a.seed);
        let spec = laplacian_spectrum(&generate_small_world(&params)?)?;
        write_file(&dir.join(format!("esd_r{r}.csv")), &esd_histogram(&spec, 40)?.to_csv())?;
        let fit =
            predict_from_sigma_max(&params, sigma_max, MomentSource::Expected { variant: MomentVariant::Corrected });
        let entry = match fit {
            Ok(p) => {
                write_file(&dir.join(format!("triangle_r{r}.csv")), &p.fit().density_csv(200))?;
                json!({"r": r, "lambda_2": spec.lambda2(), "lambda_n": spec.max(), "x1": p.x1, "x3": p.x3})
            }
            Err(e) => json!({"r": r, "lambda_2": spec.lambda2(), "lambda_n": spec.max(), "fit_error": e.to_string()}),
        };
        esd.push(entry);
    }

    let params = SmallWorldParams::new(512, 3, 4.0, a.seed);
    let lit = predict_from_sigma_max(&params, sigma_max, MomentSource::Literal { m1: 10.0, m2: 114.0, m3: 1431.0 })?;
    let paper = predict_from_sigma_max(&params, sigma_max, MomentSource::Expected { variant: MomentVariant::Paper })?;

    let ring_runs = [1.0, 1.3]
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            traced_run(&dir, &format!("ring6_gamma{g}"), &ring, g, a.ring_amplitude, a.seed + i as u64, a.t_end)
        })
        .collect::<Result<Vec<_>>>()?;
    let big = generate_small_world(&params)?;
    let big_runs = [0.1, 0.3]
        .iter()
        .map(|&g| traced_run(&dir, &format!("sw512_gamma{g}"), &big, g, a.amplitude, a.seed, a.t_end))
        .collect::<Result<Vec<_>>>()?;

    let summary = json!({
        "inputs": {
            "seed": a.seed,
            "samples": a.samples,
            "amplitude": a.amplitude,
            "ring_amplitude": a.ring_amplitude,
            "t_end": a.t_end,
        },
        "ring6_eigenvalues": ring_spec.eigenvalues,
        "period": cycle.period,
        "sigma_max": thresholds,
        "ring6_gamma_bound": sigma_max / ring_spec.max(),
        "literal_fit": {"x1": literal.x1, "x2": literal.x2, "x3": literal.x3},
        "gamma_max": {"literal": lit.gamma_max, "paper_variant": paper.gamma_max},
        "spectra": esd,
        "ring6_runs": ring_runs,
        "sw512_runs": big_runs,
    });
    write_file(&dir.join("summary.json"), &to_json(&summary))?;
    print!("{}", to_json(&summary));
    Ok(())
}
