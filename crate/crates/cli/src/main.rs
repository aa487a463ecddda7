//! `stretch`: solve, certify and relate the two bin stretching games.

mod cache;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;

use cache::{Record, ResultsCache};
use stretch_core::bounds::{self, GPrime};
use stretch_core::lifting::{compute_g_prime_int, delta_above_floor, delta_below_ceiling, evaluate_lifted};
use stretch_core::proofs::{self, Verdict};
use stretch_core::{
    Config, LowerSolver, OverflowLegality, ProofDocument, Score, SolveError, SolveOptions, UpperSolver,
};

const EXIT_MISMATCH: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_RESOURCE: u8 = 75;

#[derive(Parser)]
#[command(name = "stretch", version, about = "Exact solvers for online bin stretching games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the lower-bound game (integer item sizes) exactly.
    Lower {
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Solve the upper-bound game (item classes with overflows) exactly.
    Upper {
        #[command(flatten)]
        solve: SolveArgs,
        /// Only allow a class if every overflow outcome keeps the load-sum rule.
        #[arg(long)]
        strict_overflow_legality: bool,
    },
    /// Check a proof file and print the value it certifies.
    Verify { path: PathBuf },
    /// Lift the optimal lower-game policy at the enlarged bin size and
    /// evaluate it in the upper game.
    Lift {
        #[command(flatten)]
        instance: Instance,
        #[arg(long, value_name = "N")]
        max_states: Option<u64>,
    },
    /// Closed-form bound arithmetic.
    Bounds {
        #[command(subcommand)]
        which: BoundsCommand,
    },
    /// Tabulate both game values for g = 1..=g-max as CSV.
    Sweep {
        #[arg(short)]
        m: u32,
        #[arg(long)]
        g_max: u32,
        /// Write a proof for every solved value into this directory.
        #[arg(long, value_name = "DIR")]
        proof_dir: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Lower bound on the optimal factor implied by an upper-game value.
    Corollary {
        #[arg(short, value_parser = parse_ratio, value_name = "P/Q")]
        u: Ratio<u64>,
        #[command(flatten)]
        instance: Instance,
        /// Divide by the ceiled enlarged bin size instead of the real one.
        #[arg(long)]
        ceil_gprime: bool,
    },
    /// Interval for the optimal factor from a lower-game value solved at the
    /// ceiled enlarged bin size.
    Interval {
        #[arg(short, value_parser = parse_ratio, value_name = "P/Q")]
        l: Ratio<u64>,
        #[command(flatten)]
        instance: Instance,
    },
}

#[derive(Args, Clone, Copy)]
struct Instance {
    /// Number of bins.
    #[arg(short, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    /// Granularity.
    #[arg(short, value_parser = clap::value_parser!(u32).range(1..))]
    g: u32,
}

#[derive(Args, Clone, Copy)]
struct SearchArgs {
    /// Disable alpha-beta cutoffs (same value, slower).
    #[arg(long)]
    no_prune: bool,
    /// Worker threads for root moves. The printed value and proof are the
    /// same for every thread count.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,
    /// Give up (exit 75) after expanding this many positions.
    #[arg(long, value_name = "N")]
    max_states: Option<u64>,
}

impl SearchArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions { prune: !self.no_prune, threads: self.threads as usize, max_states: self.max_states }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: Instance,
    /// Write the strategy tree to this file.
    #[arg(long, value_name = "PATH")]
    proof: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

/// Rationals are `p/q` or a bare integer; decimals are refused so inputs
/// stay exact.
fn parse_ratio(s: &str) -> Result<Ratio<u64>, String> {
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p: u64 = p.trim().parse().map_err(|_| format!("expected p/q with integers, got {s:?}"))?;
    let q: u64 = q.trim().parse().map_err(|_| format!("expected p/q with integers, got {s:?}"))?;
    if q == 0 {
        return Err("denominator must be positive".into());
    }
    Ok(Ratio::new(p, q))
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match e {
            SolveError::ResourceLimit { .. } => EXIT_RESOURCE,
            SolveError::ThreadPool(_) => 1,
        };
        Self { code, error: e.into() }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Lower { solve } => solve_cmd(Game::Lower, &solve),
        Command::Upper { solve, strict_overflow_legality } => {
            let game = if strict_overflow_legality { Game::Upper(OverflowLegality::Strict) } else { Game::Upper(OverflowLegality::Lenient) };
            solve_cmd(game, &solve)
        }
        Command::Verify { path } => verify_cmd(&path),
        Command::Lift { instance, max_states } => lift_cmd(instance, max_states),
        Command::Bounds { which } => {
            bounds_cmd(which);
            Ok(0)
        }
        Command::Sweep { m, g_max, proof_dir, search } => sweep_cmd(m, g_max, proof_dir.as_deref(), search),
    }
}

#[derive(Clone, Copy)]
enum Game {
    Lower,
    Upper(OverflowLegality),
}

impl Game {
    fn cache_key(self) -> &'static str {
        match self {
            Game::Lower => "lower",
            Game::Upper(OverflowLegality::Lenient) => "upper",
            Game::Upper(OverflowLegality::Strict) => "upper-strict",
        }
    }
}

fn config(m: u32, g: u32) -> Result<Config, Failure> {
    Config::new(m, g).map_err(|e| Failure { code: EXIT_USAGE, error: e.into() })
}

fn show(score: Score) -> String {
    format!("{score} ({})", score.to_decimal(4))
}

/// Solves fresh, optionally writing a proof. Returns the value and the
/// elapsed wall time.
fn solve_fresh(game: Game, cfg: Config, opts: SolveOptions, proof: Option<&Path>) -> Result<(Score, u128), Failure> {
    let start = Instant::now();
    let (value, doc) = match game {
        Game::Lower => {
            let solver = LowerSolver::new(cfg, opts);
            let value = solver.solve()?;
            let doc = match proof {
                Some(_) => Some(ProofDocument::lower(cfg, value.num, solver.extract_adversary_strategy()?)),
                None => None,
            };
            (value, doc)
        }
        Game::Upper(legality) => {
            let solver = UpperSolver::new(cfg, opts, legality);
            let value = solver.solve()?;
            let doc = match proof {
                Some(_) => Some(ProofDocument::upper(cfg, value.num, solver.extract_algorithm_strategy()?, legality)),
                None => None,
            };
            (value, doc)
        }
    };
    let millis = start.elapsed().as_millis();
    if let (Some(path), Some(doc)) = (proof, doc) {
        proofs::write_file(path, &doc).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok((value, millis))
}

/// Cached value if present and no proof is wanted, otherwise a fresh solve
/// that is appended to the cache.
fn solve_cached(
    cache: &mut ResultsCache,
    game: Game,
    cfg: Config,
    opts: SolveOptions,
    proof: Option<&Path>,
) -> Result<(Score, u128, Option<String>), Failure> {
    if proof.is_none() {
        if let Some(r) = cache.lookup(game.cache_key(), cfg.m(), cfg.g()) {
            eprintln!(
                "cached: {} m={} g={} from {} (solved in {} ms)",
                r.game,
                r.m,
                r.g,
                cache.path().display(),
                r.millis
            );
            return Ok((Score::new(r.value_num, cfg.g() as u64), r.millis, r.proof_path.clone()));
        }
    }
    let (value, millis) = solve_fresh(game, cfg, opts, proof)?;
    let proof_path = proof.map(|p| p.display().to_string());
    if cache.lookup(game.cache_key(), cfg.m(), cfg.g()).is_none() {
        cache.append(Record {
            game: game.cache_key().into(),
            m: cfg.m(),
            g: cfg.g(),
            value_num: value.num,
            millis,
            proof_path: proof_path.clone(),
        })?;
    }
    Ok((value, millis, proof_path))
}

fn solve_cmd(game: Game, args: &SolveArgs) -> Outcome {
    let cfg = config(args.instance.m, args.instance.g)?;
    let mut cache = ResultsCache::open(&ResultsCache::default_path())?;
    let (value, _, _) = solve_cached(&mut cache, game, cfg, args.search.options(), args.proof.as_deref())?;
    println!("{}", show(value));
    Ok(0)
}

fn verify_cmd(path: &Path) -> Outcome {
    let invalid = |e: proofs::ProofError| Failure { code: EXIT_INVALID, error: anyhow!("{}: {e}", path.display()) };
    let doc = proofs::read_file(path).map_err(invalid)?;
    match proofs::check(&doc).map_err(invalid)? {
        Verdict::Verified(v) => {
            println!("{v}");
            Ok(0)
        }
        Verdict::ClaimMismatch { claimed, verified } => {
            println!("{verified}");
            eprintln!("claim mismatch: document claims {claimed}, tree certifies {verified}");
            Ok(EXIT_MISMATCH)
        }
    }
}

fn lift_cmd(instance: Instance, max_states: Option<u64>) -> Outcome {
    let cfg = config(instance.m, instance.g)?;
    let (m, g) = (cfg.m(), cfg.g());
    let gp = compute_g_prime_int(g, m);
    let inner = config(m, gp)?;
    let opts = SolveOptions { max_states, ..SolveOptions::default() };
    let solver = LowerSolver::new(inner, opts);
    let l = solver.solve()?;
    let policy = stretch_core::lower::LowerPolicy::new(solver);
    let eval = evaluate_lifted(&policy, cfg).map_err(|e| match e {
        stretch_core::lifting::LiftError::Policy(stretch_core::PolicyError::Solve(s)) => Failure::from(s),
        other => Failure::from(anyhow::Error::from(other)),
    })?;

    let slack = bounds::slack(g, m);
    let lhs = eval.score.num;
    let holds = stretch_core::lifting::performance_bound_holds(lhs, l.num, g, m);
    let floor = -(m as f64) * (g as f64).sqrt() - 1.0;
    let ceiling = (g as f64).sqrt();
    let gaps_ok = delta_above_floor(eval.delta_min, g, m) && delta_below_ceiling(eval.delta_max, g);
    let yes = |b: bool| if b { "yes" } else { "no" };

    println!("g' = {gp}");
    println!("lower value at g': {}", show(l));
    println!("lifted worst case: {}", show(eval.score));
    println!(
        "performance check: {lhs} <= {} + {} = {}: {}",
        l.num,
        bounds::render(slack),
        bounds::render(l.num as f64 + slack),
        yes(holds)
    );
    println!(
        "gap range: [{}, {}] within [{}, {}]: {}",
        eval.delta_min,
        eval.delta_max,
        bounds::render(floor),
        bounds::render(ceiling),
        yes(gaps_ok)
    );
    println!("states explored: {}", eval.states);
    Ok(0)
}

fn bounds_cmd(which: BoundsCommand) {
    match which {
        BoundsCommand::Corollary { u, instance, ceil_gprime } => {
            let mode = if ceil_gprime { GPrime::Ceiled } else { GPrime::Real };
            println!("{}", bounds::render(bounds::lower_bound_from_upper(u, instance.g, instance.m, mode)));
        }
        BoundsCommand::Interval { l, instance } => {
            let (lo, hi) = bounds::sandwich_interval(l, instance.g, instance.m);
            println!("[{}, {}]", bounds::render(lo), bounds::render(hi));
        }
    }
}

fn sweep_cmd(m: u32, g_max: u32, proof_dir: Option<&Path>, search: SearchArgs) -> Outcome {
    if m == 0 || g_max == 0 {
        return Err(Failure { code: EXIT_USAGE, error: anyhow!("m and --g-max must be at least 1") });
    }
    if let Some(dir) = proof_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut cache = ResultsCache::open(&ResultsCache::default_path())?;
    let stdout = std::io::stdout();
    let mut out = csv::Writer::from_writer(stdout.lock());
    out.write_record(["m", "g", "game", "value_num", "value_dec", "millis", "proof_path"])
        .context("writing csv")?;

    let mut lows: Vec<Score> = Vec::new();
    let mut highs: Vec<Score> = Vec::new();
    for g in 1..=g_max {
        let cfg = config(m, g)?;
        for game in [Game::Lower, Game::Upper(OverflowLegality::Lenient)] {
            let proof = proof_dir.map(|d| d.join(format!("{}-m{m}-g{g}{}", game.cache_key(), proofs::FILE_SUFFIX)));
            let (value, millis, proof_path) = solve_cached(&mut cache, game, cfg, search.options(), proof.as_deref())?;
            out.write_record([
                m.to_string(),
                g.to_string(),
                game.cache_key().to_string(),
                value.num.to_string(),
                value.to_decimal(4),
                millis.to_string(),
                proof_path.unwrap_or_default(),
            ])
            .context("writing csv")?;
            out.flush().context("writing csv")?;
            match game {
                Game::Lower => lows.push(value),
                Game::Upper(_) => highs.push(value),
            }
        }
    }
    out.flush().context("writing csv")?;
    drop(out);

    let worst_low = lows.iter().max().copied();
    let best_high = highs.iter().min().copied();
    if let (Some(l), Some(u)) = (worst_low, best_high) {
        if l > u {
            writeln!(std::io::stderr(), "sandwich violated: lower value {l} exceeds upper value {u}").ok();
            return Ok(1);
        }
    }
    Ok(0)
}
