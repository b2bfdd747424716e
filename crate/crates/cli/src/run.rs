//! The experiment runners behind each subcommand.

use std::path::{Path, PathBuf};

use commlearn::codes::{build_tanner, Encoder, TannerGraph};
use commlearn::ldbp::{
    design_fir, fir_response, inverse_dispersion_response, pooled_effective_snr_db,
    run_ldbp_experiment, simulate_burst, train_ldbp, Equalizer, FilterBank, FirDesign,
};
use commlearn::rng::derive_seed;
use commlearn::sim::{ber_point, ber_sweep, BerPoint, Decoder};
use commlearn::train::{save_checkpoint, train_decoder};
use commlearn::wbp::{Automorphisms, RrdConfig};
use serde::Serialize;
use toml::{Table, Value};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{CliError, CliResult};

pub const METADATA_FILE: &str = "metadata.toml";

pub fn run(kind: Kind, cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(out.to_path_buf(), e))?;
    let results = match kind {
        Kind::BerSweep => ber(cfg, out, false)?,
        Kind::RrdEval => ber(cfg, out, true)?,
        Kind::TrainDecoder => train(cfg, out)?,
        Kind::LdbpSim => ldbp_sim(cfg, out)?,
        Kind::LdbpTrain => ldbp_train(cfg, out)?,
        Kind::FilterDesign => filter_design(cfg, out)?,
    };
    write_metadata(out, kind, cfg, results)
}

fn write_metadata(out: &Path, kind: Kind, cfg: &ExperimentConfig, results: Table) -> CliResult<()> {
    let mut run = Table::new();
    run.insert("command".into(), kind.name().into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("seed".into(), Value::Integer(cfg.seed() as i64));
    let mut root = Table::new();
    root.insert("run".into(), Value::Table(run));
    root.insert("results".into(), Value::Table(results));
    root.insert("config".into(), Value::try_from(cfg)?);
    write_text(&out.join(METADATA_FILE), &toml::to_string(&root)?)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn graph(cfg: &ExperimentConfig) -> CliResult<TannerGraph> {
    Ok(build_tanner(&cfg.code.matrix()?)?)
}

fn ber(cfg: &ExperimentConfig, out: &Path, rrd: bool) -> CliResult<Table> {
    cfg.sweep.validate()?;
    let g = graph(cfg)?;
    let encoder = Encoder::new(&g.to_matrix());
    let decoder = if rrd {
        let r = &cfg.rrd;
        Decoder::Rrd {
            weights: cfg.decoder.weights(&g, r.iterations_per_permutation)?,
            config: RrdConfig {
                num_blocks: r.blocks,
                iterations_per_permutation: r.iterations_per_permutation,
                mixing: r.mixing,
                damping: r.damping,
                // replaced per frame by a stream derived from the frame seed
                automorphisms: Automorphisms::Random { seed: 0 },
                early_exit: r.early_exit,
            },
        }
    } else {
        Decoder::Wbp(cfg.decoder.weights(&g, cfg.decoder.iterations)?)
    };
    let ber_cfg = cfg.sweep.ber_config();
    let rows: Vec<BerPoint> = match cfg.sweep.row_seed {
        Some(seed) => vec![ber_point(
            &g,
            &encoder,
            &decoder,
            cfg.sweep.ebn0_db[0],
            &ber_cfg,
            seed,
        )?],
        None => ber_sweep(
            &g,
            &encoder,
            &decoder,
            &cfg.sweep.ebn0_db,
            &ber_cfg,
            cfg.seed(),
        )?,
    };
    for r in &rows {
        log::info!(
            "Eb/N0 {} dB: BER {:.3e} ({} errors, {} frames)",
            r.ebn0_db,
            r.ber,
            r.bit_errors,
            r.frames
        );
    }
    write_csv(&out.join("ber.csv"), &rows)?;
    let mut t = Table::new();
    t.insert("rows".into(), Value::Integer(rows.len() as i64));
    t.insert(
        "total_iterations".into(),
        Value::Integer(decoder.total_iterations() as i64),
    );
    Ok(t)
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    minibatch: usize,
    loss: f64,
    grad_norm_preclip: f64,
}

pub const CHECKPOINT_FILE: &str = "checkpoint.toml";

fn train(cfg: &ExperimentConfig, out: &Path) -> CliResult<Table> {
    let g = graph(cfg)?;
    let init = cfg.decoder.weights(&g, cfg.decoder.iterations)?;
    let outcome = train_decoder(&g, &init, &cfg.train)?;
    save_checkpoint(&outcome.weights, out.join(CHECKPOINT_FILE))?;
    let rows: Vec<LossRow> = outcome
        .log
        .iter()
        .map(|r| LossRow {
            epoch: r.epoch,
            minibatch: r.minibatch,
            loss: r.loss,
            grad_norm_preclip: r.grad_norm_preclip,
        })
        .collect();
    write_csv(&out.join("loss_log.csv"), &rows)?;
    let mut t = Table::new();
    t.insert("checkpoint".into(), CHECKPOINT_FILE.into());
    t.insert("minibatches".into(), Value::Integer(rows.len() as i64));
    if let Some((before, after)) = outcome.validation {
        log::info!("validation loss {before:.6} -> {after:.6}");
        t.insert("validation_loss_initial".into(), before.into());
        t.insert("validation_loss_final".into(), after.into());
    }
    Ok(t)
}

#[derive(Serialize)]
struct LdbpCsvRow {
    launch_power_dbm: f64,
    method: &'static str,
    taps_total: usize,
    effective_snr_db: f64,
    seed: u64,
}

fn ldbp_sim(cfg: &ExperimentConfig, out: &Path) -> CliResult<Table> {
    let exp = run_ldbp_experiment(&cfg.ldbp)?;
    let rows: Vec<LdbpCsvRow> = exp
        .rows
        .iter()
        .map(|r| LdbpCsvRow {
            launch_power_dbm: r.launch_power_dbm,
            method: r.method.name(),
            taps_total: r.taps_total,
            effective_snr_db: r.effective_snr_db,
            seed: r.seed,
        })
        .collect();
    write_csv(&out.join("ldbp.csv"), &rows)?;
    let mut banks = Vec::new();
    for (i, (power, bank)) in exp.trained.iter().enumerate() {
        let name = format!("ldbp_bank_{i}.toml");
        bank.save(out.join(&name))?;
        let mut entry = Table::new();
        entry.insert("launch_power_dbm".into(), (*power).into());
        entry.insert("file".into(), name.into());
        banks.push(Value::Table(entry));
    }
    let mut t = Table::new();
    t.insert("rows".into(), Value::Integer(rows.len() as i64));
    t.insert("trained_banks".into(), Value::Array(banks));
    Ok(t)
}

#[derive(Serialize)]
struct LdbpLossRow {
    iteration: usize,
    loss: f64,
}

pub const BANK_FILE: &str = "filter_bank.toml";

fn ldbp_train(cfg: &ExperimentConfig, out: &Path) -> CliResult<Table> {
    let link = &cfg.ldbp.link;
    let section = &cfg.ldbp_train;
    link.validate()?;
    let init = match &section.init_bank {
        Some(path) => FilterBank::load(path)?,
        None => link.repeated_bank(section.init)?,
    };
    let power = section.launch_power_dbm;
    let outcome = train_ldbp(link, power, &init, &cfg.ldbp.train)?;
    outcome.bank.save(out.join(BANK_FILE))?;
    let rows: Vec<LdbpLossRow> = outcome
        .log
        .iter()
        .map(|&(iteration, loss)| LdbpLossRow { iteration, loss })
        .collect();
    write_csv(&out.join("loss_log.csv"), &rows)?;

    // held-out bursts, disjoint from the training seeds
    let eval_seed = derive_seed(cfg.seed(), u64::MAX);
    let bursts = (0..section.eval_bursts as u64)
        .map(|i| simulate_burst(link, power, derive_seed(eval_seed, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new();
    t.insert("bank".into(), BANK_FILE.into());
    t.insert(
        "total_taps".into(),
        Value::Integer(outcome.bank.total_taps() as i64),
    );
    if !bursts.is_empty() {
        let before = pooled_effective_snr_db(link, &bursts, &Equalizer::Filters(init))?;
        let after =
            pooled_effective_snr_db(link, &bursts, &Equalizer::Filters(outcome.bank.clone()))?;
        log::info!("effective SNR {before:.2} dB -> {after:.2} dB");
        t.insert("effective_snr_initial_db".into(), before.into());
        t.insert("effective_snr_trained_db".into(), after.into());
    }
    let (lo, hi) = outcome.bank.band_gain_range_db(link.band_fraction());
    t.insert("in_band_gain_min_db".into(), lo.into());
    t.insert("in_band_gain_max_db".into(), hi.into());
    Ok(t)
}

#[derive(Serialize)]
struct TapRow {
    index: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct ResponseRow {
    frequency_hz: f64,
    gain_db: f64,
    error_db: f64,
    in_band: bool,
}

fn filter_design(cfg: &ExperimentConfig, out: &Path) -> CliResult<Table> {
    let link = &cfg.ldbp.link;
    link.validate()?;
    let f = &cfg.filter;
    if f.response_points < 2 {
        return Err(CliError::Config(
            "filter.response_points must be at least 2".into(),
        ));
    }
    let band = link.band_fraction();
    let design = FirDesign::new(f.design, f.taps.unwrap_or(link.taps), band);
    let step = link.fiber.span_length / link.eq_steps_per_span as f64;
    let fs = link.eq_sample_rate();
    let taps = design_fir(&design, step, link.fiber.beta2, fs)?;
    let tap_rows: Vec<TapRow> = taps
        .iter()
        .enumerate()
        .map(|(index, z)| TapRow {
            index,
            re: z.re,
            im: z.im,
        })
        .collect();
    write_csv(&out.join("taps.csv"), &tap_rows)?;

    let pi = std::f64::consts::PI;
    let n = f.response_points;
    let (mut worst_in, mut worst_out) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let rows: Vec<ResponseRow> = (0..n)
        .map(|i| {
            let t = -pi + 2.0 * pi * i as f64 / (n - 1) as f64;
            let h = fir_response(&taps, t);
            let d = inverse_dispersion_response(t, step, link.fiber.beta2, fs);
            let in_band = t.abs() <= band * pi;
            let gain_db = 20.0 * h.norm().log10();
            let error_db = 20.0 * (h - d).norm().log10();
            if in_band {
                worst_in = worst_in.max(error_db);
            } else {
                worst_out = worst_out.max(gain_db);
            }
            ResponseRow {
                frequency_hz: t * fs / (2.0 * pi),
                gain_db,
                error_db,
                in_band,
            }
        })
        .collect();
    write_csv(&out.join("response.csv"), &rows)?;
    let mut t = Table::new();
    t.insert("method".into(), f.design.name().into());
    t.insert("taps".into(), Value::Integer(taps.len() as i64));
    t.insert("step_length_m".into(), step.into());
    t.insert("max_in_band_error_db".into(), worst_in.into());
    if worst_out.is_finite() {
        t.insert("max_out_of_band_gain_db".into(), worst_out.into());
    }
    Ok(t)
}

/// Output directory: the flag, then the config, then `./out`.
pub fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
