//! `tenformat`: membership, dimensions, containment bounds and separation
//! witnesses for tensor network state varieties.
//!
//! Exit codes: 0 when the computed claim is verified, 1 when it is
//! falsified, 2 on usage errors or malformed input.

mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tenformat::harness::{
    jacobian_dimension_oracle, verify_cherry_sweep, verify_hackbusch_sweep, OrderingFilter,
};
use tenformat::tns::{dimension_report, is_member, rank_profile, sample_member, variety_dimension};
use tenformat::transfer::{hf_to_tt_bound, transfer_exponent, tt_to_hf_bound};
use tenformat::witness::{cherry_witness, hackbusch_witness, naive_rank_gap_example};
use tenformat::{rng_from_seed, AnyTensor, Arith, Error, LeafOrdering, DEFAULT_FLOAT_TOL};

#[derive(Parser)]
#[command(name = "tenformat", version, about = "Tensor network state varieties over binary trees")]
struct Cli {
    /// Arithmetic for rank computations.
    #[arg(long, global = true, value_enum)]
    arith: Option<ArithArg>,
    /// Rank tolerance: 0 for rational, relative singular-value cutoff for float.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; TENFORMAT_JOBS takes precedence.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArithArg {
    Rational,
    Float,
}

impl From<ArithArg> for Arith {
    fn from(a: ArithArg) -> Arith {
        match a {
            ArithArg::Rational => Arith::Rational,
            ArithArg::Float => Arith::Float,
        }
    }
}

#[derive(Args)]
struct TreeArgs {
    /// `perfect`, `traintrack`, inline tree JSON or a path to it.
    #[arg(long, default_value = "perfect")]
    tree: String,
    /// Depth of a perfect tree (or `2^k` leaves for a train track).
    #[arg(long)]
    k: Option<usize>,
    /// Number of leaves of a train track.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// 1-based perfect-tree leaf at each train-track slot.
    #[arg(long, alias = "matching")]
    sigma: Option<String>,
    /// Leaf dimensions (one value for all leaves); defaults to r.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// Every ordering with sigma(1) = 1.
    #[arg(long, conflicts_with = "sample")]
    all: bool,
    /// This many random orderings.
    #[arg(long)]
    sample: Option<usize>,
}

impl SweepArgs {
    fn filter(&self) -> Result<OrderingFilter> {
        match (self.all, self.sample) {
            (true, _) => Ok(OrderingFilter::All),
            (false, Some(n)) => Ok(OrderingFilter::Sample(n)),
            (false, None) => bail!("choose --all or --sample N"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dimension of TNS(tree, f).
    Dim {
        #[command(flatten)]
        tree: TreeArgs,
        /// Constant rank, or rank-function JSON / path.
        #[arg(long)]
        rank: String,
        /// Leaf dimensions (one value for all leaves); default 2.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Print the JSON report including the constant-rank shortcut.
        #[arg(long)]
        report: bool,
        /// Also compute the Jacobian rank; exit 1 if it disagrees.
        #[arg(long)]
        oracle: bool,
    },
    /// Test membership of a tensor; exit 0 if it is a member, 1 otherwise.
    Member {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        rank: String,
        /// Tensor JSON or a path to it (`-` for stdin).
        #[arg(long)]
        tensor: String,
        /// 1-based factor at each leaf slot.
        #[arg(long)]
        order: Option<String>,
    },
    /// Sample a generic member of TNS(tree, f).
    Sample {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        rank: String,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
    /// Flattening rank of a tensor at every vertex.
    RankProfile {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        tensor: String,
        #[arg(long)]
        order: Option<String>,
    },
    /// Containment exponent c with TNS(A, r) ⊆ TNS(B, r^c).
    Bound {
        #[arg(long)]
        tree_a: String,
        #[arg(long)]
        tree_b: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Left-to-right leaves on both trees; prints the exponent only.
        #[arg(long, conflicts_with_all = ["order_a", "order_b"])]
        standard: bool,
        #[arg(long)]
        order_a: Option<String>,
        #[arg(long)]
        order_b: Option<String>,
        /// Print the per-vertex JSON report even with --standard.
        #[arg(long)]
        json: bool,
    },
    /// Construct a separation witness.
    #[command(subcommand)]
    Witness(WitnessKind),
    /// Run the HF-versus-TT witness over many orderings.
    VerifyHackbusch(SweepArgs),
    /// Run the cherry witness over many matchings.
    VerifyCherry(SweepArgs),
    /// The flattening of a generic HF(2,3) member on factors {1,2,3,5}.
    ExampleRank5,
}

#[derive(Subcommand)]
enum WitnessKind {
    /// A member of HF(r,k) outside TT(r^⌈k/2⌉ − 1).
    HfTt(WitnessArgs),
    /// A member of TT(r,2^k) outside HF(r² − 1, k).
    TtHf(WitnessArgs),
}

struct Outcome {
    text: String,
    verified: bool,
}

impl Outcome {
    fn verified(text: String) -> Self {
        Outcome { text, verified: true }
    }
}

fn pretty(v: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn tolerance(cli: &Cli, arith: Arith) -> f64 {
    cli.tol.unwrap_or(match arith {
        Arith::Rational => 0.0,
        Arith::Float => DEFAULT_FLOAT_TOL,
    })
}

fn load_tensor(cli: &Cli, value: &str) -> Result<(AnyTensor, f64)> {
    let mut t = input::tensor(value)?;
    if let Some(a) = cli.arith {
        t = t.into_arith(a.into())?;
    }
    let tol = tolerance(cli, t.arith());
    Ok((t, tol))
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Dim {
            tree,
            rank,
            dims,
            report,
            oracle,
        } => {
            let t = input::tree(&tree.tree, tree.k, tree.n)?;
            let f = input::rank_function(rank, &t)?;
            let dims = input::dims(dims.as_deref(), t.num_leaves())?;
            if *oracle {
                let rep = jacobian_dimension_oracle(&t, &f, &dims, cli.seed)?;
                return Ok(Outcome {
                    verified: rep.agrees,
                    text: pretty(&rep)?,
                });
            }
            if *report {
                return Ok(Outcome::verified(pretty(&dimension_report(&t, &f, &dims)?)?));
            }
            Ok(Outcome::verified(variety_dimension(&t, &f, &dims)?.to_string()))
        }
        Command::Member {
            tree,
            rank,
            tensor,
            order,
        } => {
            let t = input::tree(&tree.tree, tree.k, tree.n)?;
            let f = input::rank_function(rank, &t)?;
            let ordering = input::optional_ordering(order.as_deref(), t.num_leaves())?;
            let (x, tol) = load_tensor(cli, tensor)?;
            let (member, profile) = match &x {
                AnyTensor::Rational(x) => is_member(x, &t, &ordering, &f, tol)?,
                AnyTensor::Float(x) => is_member(x, &t, &ordering, &f, tol)?,
            };
            Ok(Outcome {
                text: pretty(&json!({ "member": member, "profile": profile }))?,
                verified: member,
            })
        }
        Command::Sample { tree, rank, dims } => {
            let t = input::tree(&tree.tree, tree.k, tree.n)?;
            let f = input::rank_function(rank, &t)?;
            let dims = input::dims(dims.as_deref(), t.num_leaves())?;
            let (x, chain) = sample_member(&t, &f, &dims, &mut rng_from_seed(cli.seed))?;
            let profile = rank_profile(&x, &t, &LeafOrdering::identity(t.num_leaves()), 0.0)?;
            let arith = cli.arith.map_or(Arith::Rational, Arith::from);
            let x = AnyTensor::Rational(x).into_arith(arith)?;
            Ok(Outcome::verified(pretty(&json!({
                "tensor": x,
                "profile": profile,
                "chain": chain.to_json(),
            }))?))
        }
        Command::RankProfile {
            tree,
            tensor,
            order,
        } => {
            let t = input::tree(&tree.tree, tree.k, tree.n)?;
            let ordering = input::optional_ordering(order.as_deref(), t.num_leaves())?;
            let (x, tol) = load_tensor(cli, tensor)?;
            let profile = match &x {
                AnyTensor::Rational(x) => rank_profile(x, &t, &ordering, tol)?,
                AnyTensor::Float(x) => rank_profile(x, &t, &ordering, tol)?,
            };
            Ok(Outcome::verified(pretty(&profile)?))
        }
        Command::Bound {
            tree_a,
            tree_b,
            k,
            n,
            standard,
            order_a,
            order_b,
            json,
        } => {
            let a = input::tree(tree_a, *k, *n)?;
            let b = input::tree(tree_b, *k, n.or(Some(a.num_leaves())))?;
            let oa = input::optional_ordering(order_a.as_deref(), a.num_leaves())?;
            let ob = input::optional_ordering(order_b.as_deref(), b.num_leaves())?;
            let report = transfer_exponent(&a, &oa, &b, &ob)?;
            if *standard {
                let expected = standard_bound(tree_a, tree_b, a.num_leaves())?;
                let verified = expected.is_none_or(|e| e == report.exponent);
                let text = if *json {
                    pretty(&report)?
                } else {
                    report.exponent.to_string()
                };
                return Ok(Outcome { text, verified });
            }
            Ok(Outcome::verified(pretty(&report)?))
        }
        Command::Witness(kind) => witness(cli, kind),
        Command::VerifyHackbusch(args) => {
            let report = verify_hackbusch_sweep(args.k, args.r, args.filter()?, cli.seed)?;
            Ok(Outcome {
                verified: report.all_ok(),
                text: pretty(&report)?,
            })
        }
        Command::VerifyCherry(args) => {
            let report = verify_cherry_sweep(args.k, args.r, args.filter()?, cli.seed)?;
            Ok(Outcome {
                verified: report.all_ok(),
                text: pretty(&report)?,
            })
        }
        Command::ExampleRank5 => {
            let (_, ex) = naive_rank_gap_example(&mut rng_from_seed(cli.seed))?;
            Ok(Outcome {
                text: format!("rank={} naive={}", ex.rank, ex.naive),
                verified: ex.rank == 5 && ex.naive == 8,
            })
        }
    }
}

/// Closed-form exponent for the standard perfect / train-track pair.
fn standard_bound(a: &str, b: &str, leaves: usize) -> Result<Option<usize>> {
    let k = leaves.trailing_zeros() as usize;
    let is_hf = |s: &str| matches!(s, "perfect" | "hf");
    let is_tt = |s: &str| matches!(s, "traintrack" | "train-track" | "tt");
    Ok(if !leaves.is_power_of_two() || k == 0 {
        None
    } else if is_hf(a) && is_tt(b) {
        Some(hf_to_tt_bound(k)?)
    } else if is_tt(a) && is_hf(b) {
        Some(tt_to_hf_bound(k)?)
    } else {
        None
    })
}

fn witness(cli: &Cli, kind: &WitnessKind) -> Result<Outcome> {
    let (args, hf_tt) = match kind {
        WitnessKind::HfTt(a) => (a, true),
        WitnessKind::TtHf(a) => (a, false),
    };
    if args.k > 10 {
        bail!("k = {} is beyond desk scale", args.k);
    }
    let n = 1usize << args.k;
    let sigma = input::optional_ordering(args.sigma.as_deref(), n)?;
    let dims = match &args.dims {
        None => vec![args.r; n],
        Some(d) => input::dims(Some(d), n)?,
    };
    let mut rng = rng_from_seed(cli.seed);
    let built = if hf_tt {
        hackbusch_witness(args.k, args.r, &sigma, &dims, &mut rng).map(|w| {
            let target = args.r.pow(args.k.div_ceil(2) as u32);
            json!({
                "j": w.j,
                "rank": w.rank,
                "target": target,
                "mask": w.mask,
                "trace": w.trace,
                "certificate": {
                    "tensor": AnyTensor::Rational(w.tensor),
                    "profile": w.profile,
                },
            })
        })
    } else {
        cherry_witness(args.k, args.r, &sigma, &dims, &mut rng).map(|w| {
            json!({
                "cherry": [w.cherry.0, w.cherry.1],
                "rank": w.rank,
                "target": args.r * args.r,
                "certificate": {
                    "tensor": AnyTensor::Rational(w.tensor),
                    "profile": w.profile,
                },
            })
        })
    };
    match built {
        Ok(v) => Ok(Outcome::verified(pretty(&v)?)),
        Err(Error::ConstructionFailure { trace }) => Ok(Outcome {
            text: pretty(&json!({ "verified": false, "trace": trace }))?,
            verified: false,
        }),
        Err(e) => Err(e.into()),
    }
}

fn configure_jobs(cli: &Cli) -> Result<()> {
    let jobs = match std::env::var("TENFORMAT_JOBS") {
        Ok(v) => Some(v.trim().parse::<usize>().context("TENFORMAT_JOBS must be a positive integer")?),
        Err(_) => cli.jobs,
    };
    if let Some(j) = jobs {
        if j == 0 {
            bail!("the number of jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_jobs(&cli).and_then(|()| run(&cli)).and_then(|outcome| {
        match &cli.out {
            Some(path) => std::fs::write(path, format!("{}\n", outcome.text))
                .with_context(|| format!("writing {}", path.display()))?,
            None => {
                let mut stdout = std::io::stdout().lock();
                if let Err(e) = writeln!(stdout, "{}", outcome.text) {
                    if e.kind() != std::io::ErrorKind::BrokenPipe {
                        return Err(e.into());
                    }
                }
            }
        }
        Ok(outcome.verified)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
