use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracsob::experiments::{run, ExperimentConfig, ExperimentReport, Kind};
use fracsob::geometry::{catalog_domain, reflect_centers, whitney_cover, AmbientBall};
use fracsob::quadrature::{gagliardo, sample};

/// Fractional Sobolev experiments on catalog domains.
///
/// Exit status: 0 when every verdict is as expected, 2 on a mismatch,
/// 1 on an error.
#[derive(Parser)]
#[command(name = "fracsob", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Catalog domain, e.g. disk, square, cusp-exterior:2.
    #[arg(long, default_value = "disk")]
    domain: String,
    /// Comma-separated function names, e.g. coord:1,bump.
    #[arg(long = "fn", value_delimiter = ',', default_value = "coord:1")]
    functions: Vec<String>,
    /// Comma-separated integrability exponents.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    p: Vec<f64>,
    /// Inner exponent of the Poincaré check (defaults to p).
    #[arg(long)]
    q: Option<f64>,
    /// Comma-separated fractional orders, increasing.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.9,0.95")]
    s: Vec<f64>,
    /// Grid spacing.
    #[arg(long, default_value_t = 1.0 / 32.0)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples per ball measure.
    #[arg(long, default_value_t = 4096)]
    budget: usize,
    /// Directory for report files; nothing is written when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Whitney cover of the complement in the ambient ball.
    Whitney {
        #[arg(long, default_value = "disk")]
        domain: String,
        /// Finest dyadic level.
        #[arg(long, default_value_t = 8)]
        level: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One Gagliardo double integral.
    Seminorm {
        #[arg(long, default_value = "disk")]
        domain: String,
        #[arg(long = "fn", default_value = "coord:1")]
        function: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 1.0 / 32.0)]
        h: f64,
    },
    BbmSweep(Common),
    Poincare(Common),
    Ahlfors(Common),
    Content(Common),
    ExtendCheck(Common),
    Dichotomy(Common),
    /// Run config files; each writes to its own `out` unless `--out` is given.
    Report {
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config(kind: Kind, c: &Common) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind, &c.domain);
    cfg.functions = c.functions.clone();
    cfg.p = c.p.clone();
    cfg.q = c.q;
    cfg.s = c.s.clone();
    cfg.h = c.h;
    cfg.seed = c.seed;
    cfg.budget = c.budget;
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    cfg
}

fn print_report(r: &ExperimentReport) {
    for c in &r.checks {
        let mark = if c.matches { "ok  " } else { "MISS" };
        println!("{mark} {}: {} (expected {}, margin {:.3e})", c.name, c.observed, c.expected, c.margin);
    }
    eprintln!("{:?} finished in {:.1} s", r.config.kind, r.wall_time);
}

fn run_one(cfg: &ExperimentConfig, out: Option<&Path>) -> fracsob::Result<bool> {
    let r = run(cfg)?;
    print_report(&r);
    if let Some(dir) = out {
        for p in r.write(dir)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(r.all_match())
}

fn execute(cmd: Cmd) -> fracsob::Result<bool> {
    match cmd {
        Cmd::Whitney { domain, level, out } => {
            let dom = catalog_domain(&domain)?;
            let root = AmbientBall::for_domain(&dom);
            let cover = reflect_centers(&whitney_cover(&dom, &root, level)?, &dom)?;
            let p3 = cover.property3(&dom, 3);
            let summary = serde_json::json!({
                "domain": domain,
                "cubes": cover.len(),
                "level_range": cover.level_range(),
                "unresolved_volume": cover.unresolved_volume,
                "overlap_bound": cover.overlap_bound(),
                "property3": p3,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let mut csv = String::from("level,x,y,diam,x_star,y_star\n");
                for i in 0..cover.len() {
                    let (c, r) = (cover.center(i), cover.reflected_centers[i]);
                    csv.push_str(&format!("{},{:e},{:e},{:e},{:e},{:e}\n", cover.cubes[i].level, c[0], c[1], cover.diam(i), r[0], r[1]));
                }
                std::fs::write(dir.join("whitney.csv"), csv)?;
                std::fs::write(dir.join("whitney.json"), serde_json::to_string_pretty(&summary)?)?;
            }
            Ok(p3.pass)
        }
        Cmd::Seminorm { domain, function, p, s, h } => {
            let g = sample(&catalog_domain(&domain)?, &function, h)?;
            let est = gagliardo(&g, s, p, None)?;
            println!("{}", serde_json::to_string_pretty(&est)?);
            Ok(true)
        }
        Cmd::BbmSweep(c) => run_one(&config(Kind::BbmSweep, &c), c.out.as_deref()),
        Cmd::Poincare(c) => run_one(&config(Kind::Poincare, &c), c.out.as_deref()),
        Cmd::Ahlfors(c) => run_one(&config(Kind::Ahlfors, &c), c.out.as_deref()),
        Cmd::Content(c) => run_one(&config(Kind::ContentTrend, &c), c.out.as_deref()),
        Cmd::ExtendCheck(c) => run_one(&config(Kind::ExtendCheck, &c), c.out.as_deref()),
        Cmd::Dichotomy(c) => run_one(&config(Kind::Dichotomy, &c), c.out.as_deref()),
        Cmd::Report { configs, out } => {
            let mut all = true;
            for path in &configs {
                let cfg = ExperimentConfig::from_file(path).map_err(|e| match e {
                    fracsob::Error::Json(j) => fracsob::Error::Config {
                        field: format!("{}:{}:{}", path.display(), j.line(), j.column()),
                        msg: j.to_string(),
                    },
                    other => other,
                })?;
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let dir = match &out {
                    Some(base) => base.join(stem),
                    None => cfg.out.clone(),
                };
                all &= run_one(&cfg, Some(&dir))?;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
