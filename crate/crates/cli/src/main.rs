use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qperceptron::baselines::{train_baseline, BaselineKind, BaselineMethod};
use qperceptron::data::DatasetSpec;
use qperceptron::harness::{
    reproduce_with, run_to_file, write_rows, AttackSpec, ExperimentKind, ExperimentSpec, Figure, ResultRow,
};
use qperceptron::noise::{FixedPointCodec, NoiseGenerator};
use qperceptron::perceptron::{train_classical, train_quantum, TrainRecord, DEFAULT_MAX_ROUNDS};
use qperceptron::privacy::formula_row;
use qperceptron::protocol::{run_data_system, ProtocolParams, Streams};
use qperceptron::qstate::RegisterLayout;
use qperceptron::{BitString, Error, Result};

#[derive(Parser)]
#[command(name = "qperceptron", version, about = "Quantum privacy-preserving perceptron simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single data-system executions.
    Protocol {
        #[command(subcommand)]
        action: ProtocolCmd,
    },
    /// Train a perceptron and print its record.
    Train {
        #[command(subcommand)]
        mode: TrainCmd,
    },
    /// Closed-form detection and leak formulas.
    Privacy {
        #[command(subcommand)]
        action: PrivacyCmd,
    },
    /// Regenerate the data behind a figure or check.
    Reproduce {
        figure: String,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Run an experiment described by a config file and/or overrides.
    Experiment {
        /// Experiment kind; may also come from the config file.
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Synthetic datasets.
    Dataset {
        #[command(subcommand)]
        action: DatasetCmd,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. `--set reps=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Full delta grid and 100 repetitions.
    #[arg(long)]
    full: bool,
    /// Comma-separated; fractions such as `1/1024` are accepted.
    #[arg(long)]
    deltas: Option<String>,
    #[arg(long)]
    generators: Option<String>,
    #[arg(long)]
    datasets: Option<String>,
    #[arg(long)]
    methods: Option<String>,
    /// `;`-separated attack list.
    #[arg(long)]
    attacks: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    n2: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    set_size: Option<String>,
    #[arg(long)]
    max_rounds: Option<String>,
    #[arg(long)]
    grid: Option<String>,
}

impl ExperimentArgs {
    fn spec(&self, kind: Option<ExperimentKind>) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_config_file(path, kind)?,
            None => {
                let kind = kind.ok_or_else(|| Error::Param("--kind or --config is required".into()))?;
                ExperimentSpec::preset(kind, self.full)
            }
        };
        if let Some(kind) = kind {
            spec.kind = kind;
        }
        if self.full && self.config.is_some() {
            let full = ExperimentSpec::preset(spec.kind, true);
            spec.deltas = full.deltas;
            spec.reps = full.reps;
        }
        let flags = [
            ("deltas", &self.deltas),
            ("generators", &self.generators),
            ("datasets", &self.datasets),
            ("methods", &self.methods),
            ("attacks", &self.attacks),
            ("n", &self.n),
            ("k", &self.k),
            ("n2", &self.n2),
            ("reps", &self.reps),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("set_size", &self.set_size),
            ("max_rounds", &self.max_rounds),
            ("grid", &self.grid),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                spec.apply(key, v)?;
            }
        }
        for o in &self.overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Parse(format!("expected KEY=VALUE, got {o:?}")))?;
            spec.apply(k, v)?;
        }
        if let Some(dir) = &self.out_dir {
            spec.out_dir = dir.clone();
        }
        spec.validate()?;
        if self.full {
            eprintln!("warning: full mode runs the complete grid at 100 repetitions and can take hours");
        }
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum ProtocolCmd {
    /// Execute the three-round data system and print transcripts.
    Run {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Alice's input bits; random when omitted.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, default_value = "honest")]
        attack: String,
        #[arg(long, value_enum, default_value_t = OracleKind::Parity)]
        oracle: OracleKind,
        /// Weights then bias for `--oracle linear`, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        linear: Option<String>,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
        #[arg(long, default_value_t = 1)]
        executions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the per-round transcript of each execution.
        #[arg(long)]
        transcript: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Parity,
    Msb,
    Linear,
}

#[derive(Subcommand)]
enum TrainCmd {
    Quantum {
        #[arg(long, default_value = "gen2:N=64:seed=0")]
        dataset: String,
        /// Alice's noise generator, e.g. `R2:delta=0.5`.
        #[arg(long, default_value = "R0:delta=1")]
        generator: String,
        #[arg(long, default_value = "honest")]
        attack: String,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
        max_rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Classical {
        #[arg(long, default_value = "gen2:N=64:seed=0")]
        dataset: String,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
        max_rounds: usize,
    },
    Baseline {
        #[arg(long, default_value = "gen2:N=64:seed=0")]
        dataset: String,
        #[arg(long, default_value = "uniform")]
        method: String,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
        max_rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum PrivacyCmd {
    /// Detection probabilities and expected leaks for every n2 (or the given ones).
    Table {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        n1: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_delimiter = ',')]
        n2: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Write a generated set as CSV (stdout when --out is omitted).
    Gen {
        #[arg(long, default_value = "gen1:N=64:seed=0")]
        dataset: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn record_rows(record: &TrainRecord, fill: impl Fn(&mut ResultRow)) -> Vec<ResultRow> {
    [
        ("rounds", record.rounds as f64),
        ("updates", record.updates as f64),
        ("terminated", record.terminated as u8 as f64),
        ("success", record.success as u8 as f64),
        ("detections", record.detection_events as f64),
    ]
    .into_iter()
    .map(|(m, v)| {
        let mut r = ResultRow::new("train", m, v, 0.0, 1);
        fill(&mut r);
        r
    })
    .collect()
}

fn protocol_run(args: ProtocolCmd) -> Result<()> {
    let ProtocolCmd::Run { n, k, input, attack, oracle, linear, n1, offset, executions, seed, transcript } = args;
    let layout = RegisterLayout::new(n, k)?;
    let strategy = attack.parse::<AttackSpec>()?.strategy(layout)?;
    let codec = FixedPointCodec::new(n, n1.unwrap_or(n), offset)?;
    let coeffs: Vec<f64> = match (oracle, linear) {
        (OracleKind::Linear, Some(s)) => {
            s.split(',').map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad coefficient {t:?}")))).collect::<Result<_>>()?
        }
        (OracleKind::Linear, None) => return Err(Error::Param("--oracle linear needs --linear w1,..,wk,b".into())),
        _ => Vec::new(),
    };
    if matches!(oracle, OracleKind::Linear) && coeffs.len() != k + 1 {
        return Err(Error::Dimension { expected: k + 1, got: coeffs.len() });
    }
    let f = move |bits: &BitString| match oracle {
        OracleKind::Parity => bits.word().count_ones() % 2 == 1,
        OracleKind::Msb => bits.get(0),
        OracleKind::Linear => {
            (0..k).map(|j| coeffs[j] * codec.decode_attribute(bits, j)).sum::<f64>() + coeffs[k] > 0.0
        }
    };
    let fixed = input.map(|s| s.parse::<BitString>()).transpose()?;
    let mut params = ProtocolParams::new(layout, &f);
    params.record_transcript = transcript;
    let mut streams = Streams::from_seed(seed);
    let mut out = io::stdout().lock();
    for e in 1..=executions {
        let x = fixed.unwrap_or_else(|| BitString::random(layout.data_qubits(), &mut streams.alice));
        let o = run_data_system(&x, &params, &strategy, &mut streams)?;
        let answer = o.answer.map_or("-".to_string(), |a| (a as u8).to_string());
        let leaked: Vec<String> = o.leaked_bits.iter().map(|(q, b)| format!("{q}:{}", *b as u8)).collect();
        writeln!(
            out,
            "execution={e} input={x} f={} answer={answer} detected={} rounds={} leaked={}",
            f(&x) as u8,
            o.detection_site,
            o.rounds_executed,
            if leaked.is_empty() { "-".into() } else { leaked.join(",") }
        )?;
        if transcript {
            write!(out, "{}", o.transcript)?;
        }
    }
    Ok(())
}

fn train(mode: TrainCmd) -> Result<()> {
    let rows = match mode {
        TrainCmd::Quantum { dataset, generator, attack, max_rounds, seed } => {
            let set = dataset.parse::<DatasetSpec>()?.load()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = set.padded_to_power_of_two(&mut rng);
            let generator: NoiseGenerator = generator.parse()?;
            let layout = RegisterLayout::new(set.codec().n(), set.k())?;
            let strategy = attack.parse::<AttackSpec>()?.strategy(layout)?;
            let run = train_quantum(&set, &generator, max_rounds, &strategy, &mut Streams::from_seed(seed))?;
            let mut rows = record_rows(&run.record, |r| {
                r.dataset = Some(dataset.clone());
                r.generator = Some(generator.kind().to_string());
                r.delta = Some(generator.delta());
                r.method = Some("quantum".into());
                r.attack = Some(attack.clone());
            });
            let mut leaked = ResultRow::new("train", "leaked_bits", run.leaks.total_bits() as f64, 0.0, 1);
            leaked.dataset = Some(dataset);
            leaked.attack = Some(attack);
            rows.push(leaked);
            rows
        }
        TrainCmd::Classical { dataset, max_rounds } => {
            let set = dataset.parse::<DatasetSpec>()?.load()?;
            let (_, rec) = train_classical(set.examples(), max_rounds)?;
            record_rows(&rec, |r| {
                r.dataset = Some(dataset.clone());
                r.method = Some("classical".into());
            })
        }
        TrainCmd::Baseline { dataset, method, delta, grid, reps, max_rounds, seed } => {
            let set = dataset.parse::<DatasetSpec>()?.load()?;
            let kind: BaselineKind = method.parse()?;
            let m = BaselineMethod::new(kind, delta)?.with_grid(grid)?;
            let recs = train_baseline(&set, &m, max_rounds, reps, &mut ChaCha8Rng::seed_from_u64(seed))?;
            recs.iter()
                .flat_map(|rec| {
                    record_rows(rec, |r| {
                        r.dataset = Some(dataset.clone());
                        r.method = Some(kind.to_string());
                        r.delta = Some(delta);
                    })
                })
                .collect()
        }
    };
    write_rows(&rows, io::stdout().lock())
}

fn privacy(action: PrivacyCmd) -> Result<()> {
    let PrivacyCmd::Table { n, n1, k, n2 } = action;
    let list = if n2.is_empty() { (1..=n).collect() } else { n2 };
    let mut out = io::stdout().lock();
    writeln!(out, "n,n1,n2,k,level,attribute_detection,example_detection,expected_leaked_examples")?;
    for v in list {
        let r = formula_row(n, n1, v, k)?;
        writeln!(
            out,
            "{},{},{},{},2^{},{},{},{}",
            r.n,
            r.n1,
            r.n2,
            r.k,
            n1 as i64 - v as i64,
            r.attribute_detection,
            r.example_detection,
            r.expected_leaks
        )?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Protocol { action } => protocol_run(action),
        Command::Train { mode } => train(mode),
        Command::Privacy { action } => privacy(action),
        Command::Reproduce { figure, exp } => {
            let figure: Figure = figure.parse()?;
            let spec = exp.spec(Some(figure.experiment()))?;
            for path in reproduce_with(figure, &spec)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Experiment { kind, exp } => {
            let kind = kind.map(|k| k.parse()).transpose()?;
            let (path, _) = run_to_file(&exp.spec(kind)?)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Dataset { action } => {
            let DatasetCmd::Gen { dataset, out } = action;
            let set = dataset.parse::<DatasetSpec>()?.load()?;
            match out {
                Some(path) => set.save(path),
                None => set.write_csv(io::stdout().lock()),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
