use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Instant, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use sefa_core::analysis::{direction_similarity, pca_baseline, rescore, sweep};
use sefa_core::factorizer::{default_k, factorize, factorize_layers, load_directions, save_directions};
use sefa_core::model_io::{load_manifest, select_layers};
use sefa_core::{rng, DirectionSet, Method, Provenance, RenderedImage, ToyGenerator};

use crate::{CompareArgs, Command, FactorizeArgs, MakeToyArgs, RescoreArgs, ServeArgs, SweepArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Factorize(args) => cmd_factorize(args),
        Command::MakeToy(args) => cmd_make_toy(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Rescore(args) => cmd_rescore(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Serve(args) => cmd_serve(args),
    }
}

/// Creation time recorded in direction files: `SOURCE_DATE_EPOCH` when set,
/// otherwise the manifest's modification time, so reruns are byte-identical.
fn creation_time(manifest: &Path) -> Result<u64> {
    if let Ok(value) = std::env::var("SOURCE_DATE_EPOCH") {
        return value
            .trim()
            .parse()
            .with_context(|| format!("SOURCE_DATE_EPOCH={value:?} is not a unix timestamp"));
    }
    let modified = fs::metadata(manifest)
        .and_then(|m| m.modified())
        .with_context(|| format!("reading modification time of {}", manifest.display()))?;
    Ok(modified
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0))
}

fn print_eigenvalues(ds: &DirectionSet) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let total: f64 = ds.eigenvalues().iter().sum();
    writeln!(out, "{:>5}  {:>24}  {:>10}", "index", "eigenvalue", "share")?;
    for (i, value) in ds.eigenvalues().iter().enumerate() {
        let share = if total > 0.0 { value / total } else { 0.0 };
        writeln!(out, "{i:>5}  {value:>24.16e}  {share:>10.6}")?;
    }
    Ok(())
}

fn cmd_factorize(args: FactorizeArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let layers = select_layers(&manifest, &args.layers)?;
    let k = args.k.map_or(default_k(manifest.latent_dim), |k| k as usize);
    let rows: usize = layers.iter().map(|l| l.a.rows()).sum();

    let start = Instant::now();
    let ds = factorize_layers(&layers, k)?;
    let elapsed = start.elapsed();

    let source = Provenance::new(
        args.manifest.display().to_string(),
        args.layers.to_string(),
        Method::Sefa,
    )
    .created_at(creation_time(&args.manifest)?);
    let ds = ds.with_source(source);
    save_directions(&ds, &args.out)?;

    eprintln!(
        "factorized {rows}x{} weights from {} layer(s) into {k} directions in {:.1} ms",
        manifest.latent_dim,
        layers.len(),
        elapsed.as_secs_f64() * 1e3
    );
    let near_zero = ds.near_zero_indices();
    if !near_zero.is_empty() {
        let listed: Vec<String> = near_zero
            .iter()
            .map(|&i| format!("{i} ({:.3e})", ds.eigenvalues()[i]))
            .collect();
        eprintln!(
            "warning: {} near-zero eigenvalue(s) below 1e-10 of the largest; these directions do not change the output: {}",
            near_zero.len(),
            listed.join(", ")
        );
    }
    print_eigenvalues(&ds)
}

fn cmd_make_toy(args: MakeToyArgs) -> Result<()> {
    if let Some(r) = args.r {
        if r != args.sigma.len() {
            bail!("--r {r} does not match the {} --sigma values", args.sigma.len());
        }
    }
    let generator = if args.aligned {
        ToyGenerator::make_planted_aligned(args.d, args.m, &args.sigma, args.seed)?
    } else {
        ToyGenerator::make_planted(args.d, args.m, args.sigma.len(), &args.sigma, args.seed)?
    }
    .with_size(args.size, args.size);
    generator
        .save_dir(&args.out)
        .with_context(|| format!("writing toy generator to {}", args.out.display()))?;
    eprintln!(
        "wrote {}x{} toy generator (rank {}) to {}",
        args.m,
        args.d,
        args.sigma.len(),
        args.out.display()
    );
    Ok(())
}

fn load_pair(generator: &Path, directions: &Path) -> Result<(ToyGenerator, DirectionSet)> {
    let generator = ToyGenerator::load_dir(generator)
        .with_context(|| format!("loading toy generator from {}", generator.display()))?;
    let ds = load_directions(directions)?;
    if ds.latent_dim() != generator.latent_dim() {
        bail!(
            "directions have latent dimension {} but the generator has {}",
            ds.latent_dim(),
            generator.latent_dim()
        );
    }
    Ok((generator, ds))
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let (generator, ds) = load_pair(&args.generator, &args.directions)?;
    if args.index >= ds.k() {
        bail!("--index {} is out of range for {} directions", args.index, ds.k());
    }
    let z = rng::latent(&mut rng::seeded(args.seed), generator.latent_dim());
    let frames = sweep(
        &generator,
        &z,
        ds.direction(args.index),
        args.alpha_min,
        args.alpha_max,
        args.steps as usize,
    )?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for (i, frame) in frames.iter().enumerate() {
        let path = args.out.join(format!("frame_{i:03}.png"));
        fs::write(&path, frame.to_png()?).with_context(|| format!("writing {}", path.display()))?;
    }
    let strip = args.out.join("strip.png");
    fs::write(&strip, RenderedImage::hstack(&frames)?.to_png()?)
        .with_context(|| format!("writing {}", strip.display()))?;
    eprintln!("wrote {} frames and strip.png to {}", frames.len(), args.out.display());
    Ok(())
}

fn cmd_rescore(args: RescoreArgs) -> Result<()> {
    let (generator, ds) = load_pair(&args.generator, &args.directions)?;
    let start = Instant::now();
    let matrix = rescore(&generator, &ds, args.alpha, args.samples, args.seed)?;
    eprintln!(
        "re-scored {} directions over {} samples in {:.1} ms",
        ds.k(),
        args.samples,
        start.elapsed().as_secs_f64() * 1e3
    );
    let file = fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    matrix.write_csv(file)?;
    matrix.write_csv(std::io::stdout().lock())?;
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let generator = ToyGenerator::load_dir(&args.generator)
        .with_context(|| format!("loading toy generator from {}", args.generator.display()))?;
    let (d, m) = (generator.latent_dim(), generator.projected_dim());
    let k = args.k.map_or(default_k(d).min(m), |k| k as usize);

    let start = Instant::now();
    let sefa = factorize(generator.weights(), k)?;
    let elapsed = start.elapsed();
    let baseline = pca_baseline(&generator, args.samples, k, args.seed)?;
    let report = direction_similarity(&sefa, &baseline)?;

    eprintln!("factorize: {:.3} ms (k = {k})", elapsed.as_secs_f64() * 1e3);
    eprintln!(
        "pca baseline ({} samples): mean |cos| {:.6}, largest principal angle {:.6} rad",
        args.samples,
        report.mean_cosine(),
        report.max_angle()
    );
    if let Some(out) = &args.out {
        let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
        report.write_csv(file)?;
    }
    report.write_csv(std::io::stdout().lock())?;
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let (generator, ds) = load_pair(&args.generator, &args.directions)?;
    let state = sefa_service::AppState::new(generator, ds, &args.annotations, args.seed)?;
    let app = sefa_service::router(state, args.ui.as_deref());
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting the async runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", args.port))
            .await
            .with_context(|| format!("binding 127.0.0.1:{}", args.port))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        sefa_service::serve(listener, app, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .context("serving")
    })?;
    Ok(())
}
