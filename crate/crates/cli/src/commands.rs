use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use wavetex::filterbank::{build_bank, dual_bank, partition_residual};
use wavetex::imageio::{self, ImageBuffer};
use wavetex::projection::AdjustmentReport;
use wavetex::statistics::{self, log10_clamped};
use wavetex::synthesis::{self, LossRecord, SynthesisState};
use wavetex::theoremlab;
use wavetex::transform::{self, Banks};
use wavetex::{dump, FilterBankConfig, Image};

use crate::config::{Overrides, RunConfig};
use crate::{CliError, FilterArgs, FrameArgs, StatsArgs, SynthArgs, VerifyArgs};

/// Everything needed to reproduce a `synth` run.
#[derive(Serialize)]
struct RunManifest<'a> {
    tool_version: &'static str,
    config: &'a RunConfig,
    input: String,
    input_sha256: String,
    seed: u64,
    outputs: Vec<String>,
}

fn read_reference(path: &Path, run: &RunConfig) -> Result<(ImageBuffer, String), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let hash = hex::encode(Sha256::digest(&bytes));
    let mut buf = imageio::load(path)?;
    if run.gray {
        buf = buf.to_gray();
    }
    Ok((imageio::prepare(&buf, run.size, run.periodize)?, hash))
}

fn write_loss_csv(path: &Path, history: &[LossRecord]) -> Result<(), CliError> {
    let mut out = String::from("iteration,loss1,loss2,log10_loss1,log10_loss2\n");
    for r in history {
        let (l2, log2) = match r.loss2 {
            Some(v) => (format!("{v:e}"), format!("{}", log10_clamped(v))),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{:e},{},{},{}\n",
            r.iteration,
            r.loss1,
            l2,
            log10_clamped(r.loss1),
            log2
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// `name.csv` becomes `name_pc<c>.csv`.
fn component_path(path: &Path, c: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("loss");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_pc{c}.{ext}"))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let flags = Overrides {
        iters1: a.iters1,
        iters2: a.iters2,
        seed: a.seed,
        stop_epsilon: a.stop_epsilon,
        periodize: a.periodize.then_some(true),
        gray: a.gray.then_some(true),
        ..Default::default()
    };
    let run = RunConfig::resolve(flags.over(a.bank.overrides()?));
    run.synthesis.validate()?;
    let (reference, hash) = read_reference(&a.reference, &run)?;
    let mut outputs = vec![a.out.display().to_string()];

    match reference.channels.as_slice() {
        [plane] => {
            let every = a.checkpoint_every.filter(|&k| k > 0);
            let dir = a
                .checkpoint_dir
                .clone()
                .unwrap_or_else(|| a.out.parent().map(Path::to_path_buf).unwrap_or_default());
            if every.is_some() {
                fs::create_dir_all(&dir)?;
            }
            let mut failure = None;
            let mut observer = |state: &SynthesisState, _: &AdjustmentReport| {
                if let Some(k) = every {
                    if state.iteration % k == 0 && failure.is_none() {
                        let p = dir.join(format!("iter_{:05}.png", state.iteration));
                        match imageio::save_gray(&p, &state.image) {
                            Ok(()) => outputs.push(p.display().to_string()),
                            Err(e) => failure = Some(e),
                        }
                    }
                }
            };
            let result = synthesis::synthesize_with(plane, &run.synthesis, &mut observer)?;
            if let Some(e) = failure {
                return Err(e.into());
            }
            imageio::save_gray(&a.out, &result.image)?;
            if let Some(csv) = &a.losscsv {
                write_loss_csv(csv, &result.loss_history)?;
                outputs.push(csv.display().to_string());
            }
            report_final(&result.loss_history);
        }
        [r, g, b] => {
            let (planes, histories) = synthesis::synthesize_color(&[r.clone(), g.clone(), b.clone()], &run.synthesis)?;
            imageio::save(&a.out, &ImageBuffer::from_rgb(planes)?)?;
            if let Some(csv) = &a.losscsv {
                for (c, h) in histories.iter().enumerate() {
                    let p = component_path(csv, c);
                    write_loss_csv(&p, h)?;
                    outputs.push(p.display().to_string());
                }
            }
            for h in &histories {
                report_final(h);
            }
        }
        other => return Err(CliError::BadArgs(format!("unsupported channel count {}", other.len()))),
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        config: &run,
        input: a.reference.display().to_string(),
        input_sha256: hash,
        seed: run.synthesis.rng_seed,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(manifest_path(&a.out), text)?;
    Ok(())
}

fn report_final(history: &[LossRecord]) {
    if let Some(r) = history.last() {
        match r.loss2 {
            Some(l2) => println!("iteration {}: loss1 {:.3e}, loss2 {:.3e}", r.iteration, r.loss1, l2),
            None => println!("iteration {}: loss1 {:.3e}", r.iteration, r.loss1),
        }
    }
}

pub fn stats(a: StatsArgs) -> Result<(), CliError> {
    let flags = Overrides {
        periodize: a.periodize.then_some(true),
        gray: Some(true),
        ..Default::default()
    };
    let run = RunConfig::resolve(flags.over(a.bank.overrides()?));
    run.synthesis.validate()?;
    let (reference, _) = read_reference(&a.reference, &run)?;
    let banks = Banks::new(&run.synthesis.bank)?;
    let profile = statistics::profile(&reference.channels[0], &banks, run.synthesis.layers)?;
    fs::write(&a.out, profile.to_json()?)?;
    Ok(())
}

fn bank_config(args: &crate::BankArgs) -> Result<FilterBankConfig, CliError> {
    let cfg = RunConfig::resolve(args.overrides()?).synthesis.bank;
    cfg.validate()?;
    Ok(cfg)
}

/// Largest partition-of-unity deviation tolerated by `frame-check`.
const DUAL_TOL: f64 = 1e-8;

pub fn frame_check(a: FrameArgs) -> Result<(), CliError> {
    let cfg = bank_config(&a.bank)?;
    let bank = build_bank(&cfg)?;
    let bounds = bank.frame_bounds();
    let residual = partition_residual(&bank, &dual_bank(&bank)?)?;
    let lp = theoremlab::lp_frame_check(&bank);
    println!("filters        {}", bank.len());
    println!("frame bounds   A = {:.6e}, B = {:.6e}", bounds.lower, bounds.upper);
    println!("dual residual  {residual:.3e}");
    for o in &lp.orientations {
        println!(
            "orientation {}  violations {}  max excess {:.3e}  sign disagreements {}",
            o.orientation, o.violations, o.max_violation, o.sign_disagreements
        );
    }
    if residual > DUAL_TOL {
        return Err(CliError::Verification(format!("dual residual {residual:e} above {DUAL_TOL:e}")));
    }
    if !lp.passed() {
        return Err(CliError::Verification(format!(
            "{} odd-wavelet scale-sum violations",
            lp.violations()
        )));
    }
    Ok(())
}

fn relative_error(a: &Image, b: &Image) -> f64 {
    let diff = (a - b).mapv(|v| v * v).sum().sqrt();
    diff / b.mapv(|v| v * v).sum().sqrt().max(f64::MIN_POSITIVE)
}

/// Round-trip tolerance for both inverses.
const ROUND_TRIP_TOL: f64 = 1e-6;

pub fn verify_theorems(a: VerifyArgs) -> Result<(), CliError> {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures.push(name.to_string());
        }
    };

    let report = theoremlab::theorem1_report(
        theoremlab::DEFAULT_SIGMA,
        theoremlab::DEFAULT_XI,
        theoremlab::DEFAULT_LENGTH,
    )?;
    for c in &report.checks {
        check(&c.name, c.passed, format!("{:.3e} vs {:.3e}", c.value, c.threshold));
    }

    let banks = Banks::new(&FilterBankConfig::new(64, 3, 4, 4))?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (mut identity_ok, mut zeros_ok) = (true, true);
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for _ in 0..a.trials.max(1) {
        let x = Image::from_shape_fn((64, 64), |_| rng.gen::<f64>());
        let coeffs = transform::forward_u1(&x, &banks.first)?;
        let linear = transform::wavelet_transform(&x, &banks.first)?;
        for (key, map) in linear.iter().filter(|(k, _)| k.is_wavelet()) {
            let pair = coeffs.pair(key).ok_or_else(|| CliError::Verification(format!("missing {key}")))?;
            identity_ok &= ndarray::Zip::from(map)
                .and(&pair.plus)
                .and(&pair.minus)
                .all(|&t, &p, &m| p - m == t && p + m == t.abs());
        }
        let gram = statistics::first_layer_stats(&coeffs).gram;
        for (i, a) in gram.index.iter().enumerate() {
            for (j, b) in gram.index.iter().enumerate() {
                if a.is_structural_zero(b) {
                    zeros_ok &= gram.values[[i, j]] == 0.0;
                }
            }
        }
        worst1 = worst1.max(relative_error(&transform::invert_u1(&coeffs, &banks.first_duals)?, &x));
        let u2 = transform::forward_u2(&coeffs, &banks)?;
        worst2 = worst2.max(relative_error(&transform::invert_u2(&coeffs.low, &coeffs.high, &u2, &banks)?, &x));
    }
    check("relu identities", identity_ok, "t = σ(t) − σ(−t), |t| = σ(t) + σ(−t)".into());
    check("structural zeros", zeros_ok, "C(λ,γ,λ,−γ) = 0".into());
    check("first-layer round trip", worst1 < ROUND_TRIP_TOL, format!("max relative error {worst1:.3e}"));
    check("second-layer round trip", worst2 < ROUND_TRIP_TOL, format!("max relative error {worst2:.3e}"));

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join(", ")))
    }
}

pub fn filters(a: FilterArgs) -> Result<(), CliError> {
    let bank = build_bank(&bank_config(&a.bank)?)?;
    let manifest = dump::dump_filters(&bank, &a.dump)?;
    println!("{} filters written, manifest {}", bank.len(), manifest.display());
    Ok(())
}
