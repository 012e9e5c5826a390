use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use tiltlab::cache::DiskCache;
use tiltlab::padic::{Direction, PadicContext};
use tiltlab::projectors::{self, pjw, pqjw_closed};
use tiltlab::quiveralg::{quiver_graph, rewrite, QuiverWord};
use tiltlab::repchar::write_csv;
use tiltlab::verify::{self, Suite, VerifyConfig};

#[derive(Parser)]
#[command(name = "tiltlab", version, about = "p-Jones-Wenzl projectors, the tilting quiver and its characters")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// p-adic digit data of a vertex.
    Padic {
        #[command(subcommand)]
        cmd: PadicCmd,
    },
    /// Compute a p-JW projector and write it as JSON.
    Projector(ProjectorArgs),
    /// Rewrite a quiver word to normal form.
    Rewrite {
        #[arg(long)]
        p: u64,
        /// e.g. "D{0} U{0} @ 10"; the rightmost symbol acts first
        #[arg(long)]
        word: String,
        #[arg(long)]
        json: bool,
    },
    /// Export the quiver on the first N vertices as DOT.
    Quiver {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        vmax: u64,
        #[arg(long)]
        dot: PathBuf,
    },
    /// Write the character table for vertices below N as CSV.
    Characters {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        vmax: u64,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum PadicCmd {
    Info {
        #[arg(long)]
        p: u64,
        /// The value v (vertex v-1).
        #[arg(long)]
        v: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct ProjectorArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    v: u64,
    /// Write the rational projector instead of its reduction mod p.
    #[arg(long)]
    rational: bool,
    #[arg(long)]
    out: PathBuf,
    /// Cache directory (default: $TILTLAB_CACHE or ./.tiltlab-cache).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
    /// Refuse more strands than this.
    #[arg(long)]
    max_strands: Option<u32>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    vmax: u64,
    /// Run only these suites (repeatable).
    #[arg(long)]
    suite: Vec<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    seed: u64,
    /// Vertex bound for diagrammatic suites (default min(vmax, 12)).
    #[arg(long)]
    diagram_vmax: Option<u64>,
    #[arg(long, default_value_t = 3)]
    word_len: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
}

/// Errors split by exit code.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode, Failure> {
    match cmd {
        Cmd::Padic { cmd: PadicCmd::Info { p, v, json } } => padic_info(p, v, json),
        Cmd::Projector(a) => projector(a),
        Cmd::Rewrite { p, word, json } => {
            let w = QuiverWord::parse(&word, p).map_err(usage)?;
            let nf = rewrite(&w)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&nf.to_json())?);
            } else {
                println!("{w}  =  {nf}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Quiver { p, vmax, dot } => {
            let g = quiver_graph(p, vmax).map_err(usage)?;
            write_file(&dot, g.to_dot().as_bytes())?;
            println!(
                "{} vertices, {} arrows, {} blocks -> {}",
                vmax,
                g.arrows.len(),
                g.blocks.len(),
                dot.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Characters { p, vmax, csv } => {
            tiltlab::exactnum::check_prime(p).map_err(usage)?;
            let mut buf = Vec::new();
            write_csv(&mut buf, p, vmax)?;
            write_file(&csv, &buf)?;
            println!("{vmax} rows -> {}", csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify(a) => run_verify(a),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn install_cache(dir: Option<&Path>, disabled: bool) {
    if !disabled {
        projectors::set_store(Some(Arc::new(DiskCache::resolve(dir))));
    }
}

fn padic_info(p: u64, v: u64, json: bool) -> Result<ExitCode, Failure> {
    let c = PadicContext::new(v, p).map_err(usage)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&c.to_json())?);
        return Ok(ExitCode::SUCCESS);
    }
    let a = c.ancestry();
    let list = |xs: &[u64]| xs.iter().map(u64::to_string).collect::<Vec<_>>().join(", ");
    let sets = |xs: Vec<tiltlab::padic::DigitSet>| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
    let digits: Vec<u64> = c.digits_msd();
    println!("vertex      {} (v = {v}, p = {p})", v - 1);
    println!("digits      <{}>", list(&digits));
    println!("mother      {}", a.mother.map_or("-".into(), |m| m.to_string()));
    println!("ancestors   {}", list(&a.ancestors));
    println!("generation  {}", a.generation);
    println!("eve         {}", a.eve);
    println!("support     {}", list(&c.support().into_iter().rev().collect::<Vec<_>>()));
    println!("fsupport    {}", list(&c.fsupport().into_iter().rev().collect::<Vec<_>>()));
    println!("down        {}", sets(c.minimal_down_stretches()));
    println!("up          {}", sets(c.minimal_up_stretches()));
    println!("admissible  {}", sets(c.down_admissible_sets()));
    for s in c.minimal_down_stretches() {
        println!("  D{s}: {} -> {}", v - 1, c.reflect(s, Direction::Down)? - 1);
    }
    for s in c.minimal_up_stretches() {
        if let Ok(t) = c.reflect(s, Direction::Up) {
            println!("  U{s}: {} -> {}", v - 1, t - 1);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn projector(a: ProjectorArgs) -> Result<ExitCode, Failure> {
    tiltlab::exactnum::check_prime(a.p).map_err(usage)?;
    if a.v == 0 {
        return Err(usage(anyhow::anyhow!("v must be positive")));
    }
    if let Some(n) = a.max_strands {
        projectors::set_max_strands(n);
    }
    install_cache(a.cache_dir.as_deref(), a.no_cache);
    let json = if a.rational { pqjw_closed(a.v, a.p)?.to_json() } else { pjw(a.v, a.p)?.to_json() };
    let terms = json["terms"].as_array().map_or(0, Vec::len);
    write_file(&a.out, serde_json::to_string_pretty(&json)?.as_bytes())?;
    println!("{} terms on {} strands -> {}", terms, a.v - 1, a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run_verify(a: VerifyArgs) -> Result<ExitCode, Failure> {
    tiltlab::exactnum::check_prime(a.p).map_err(usage)?;
    let suites: Vec<Suite> = if a.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        a.suite.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(usage)?
    };
    let mut cfg = VerifyConfig::new(a.p, a.vmax);
    if let Some(d) = a.diagram_vmax {
        cfg.diagram_vmax = d;
    }
    cfg.word_len = a.word_len;
    cfg.seed = a.seed;
    cfg.jobs = a.jobs;
    install_cache(a.cache_dir.as_deref(), a.no_cache);
    let report = verify::run(&cfg, &suites)?;
    println!("{report}");
    if let Some(path) = &a.json {
        write_file(path, serde_json::to_string_pretty(&report.to_json())?.as_bytes())?;
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
