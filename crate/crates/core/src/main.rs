use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fedgbt::data::{load_csv, synth_generate, well_schema, write_csv, PartyDataset, SynthConfig};
use fedgbt::eval::evaluate;
use fedgbt::fed_hfl::{hfl_train, HflRoster, SecAggMode};
use fedgbt::fed_vfl::{vfl_assemble, vfl_train, VflRoster};
use fedgbt::gbt::{train_centralized, BoostedEnsemble};
use fedgbt::hpo::{tune_objective, SearchSpace, TuneMode, TuneSettings};
use fedgbt::orchestrator::keyfile::write_keypair;
use fedgbt::orchestrator::{
    read_transcript, run_experiment, scan_transcript, validate_transcript, write_report, write_transcript,
    ExperimentConfig, MessageKind, Regime, ScanTargets, Scenario, ScenarioData,
};
use fedgbt::phe::keygen;
use fedgbt::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "fedgbt", version, about = "Federated gradient-boosted trees: train, tune, compare, inspect")]
struct Cli {
    /// Experiment config (TOML); `synth` also accepts a generator config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config (the generator seed for `synth`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Paillier modulus size in bits.
    #[arg(long, global = true)]
    key_bits: Option<u64>,
    /// Secure aggregation of horizontal histograms.
    #[arg(long, global = true, value_enum)]
    secagg: Option<SecAgg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SecAgg {
    Paillier,
    Mask,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegimeArg {
    Separate,
    Centralized,
    Federated,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TuneArg {
    Separate,
    Centralized,
    Aggregated,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writes a Paillier keypair (`paillier.pub`, `paillier.key`).
    Keygen,
    /// Writes one synthetic CSV per district.
    Synth,
    /// Trains one regime on all samples and writes the model(s).
    Train {
        #[arg(long, value_enum, default_value = "federated")]
        regime: RegimeArg,
    },
    /// Tunes hyperparameters by Bayesian optimization over the districts.
    Tune {
        #[arg(long, value_enum, default_value = "aggregated")]
        mode: TuneArg,
    },
    /// Scores a saved model on labeled CSVs (default: the config's data).
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, num_args = 1..)]
        data: Vec<PathBuf>,
    },
    /// Runs every configured regime over shared folds and writes reports.
    Compare,
    /// Validates a transcript and scans it for leaked labels and features.
    InspectTranscript { transcript: PathBuf },
}

impl Cli {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::new(Scenario::HflCaseOne),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(b) = self.key_bits {
            c.key_bits = b;
        }
        if let Some(m) = self.secagg {
            c.secagg = match m {
                SecAgg::Paillier => SecAggMode::Paillier,
                SecAgg::Mask => SecAggMode::Mask,
            };
        }
        c.validate()?;
        Ok(c)
    }

    fn config_dir(&self) -> Option<&Path> {
        self.config.as_deref().and_then(Path::parent)
    }

    fn scenario_data(&self, c: &ExperimentConfig) -> Result<ScenarioData> {
        ScenarioData::new(c.scenario, c.data.load(self.config_dir())?)
    }
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn keygen_cmd(cli: &Cli) -> Result<()> {
    let bits = cli.key_bits.unwrap_or(512);
    let kp = keygen(bits, cli.seed.unwrap_or(1))?;
    write_keypair(&cli.out, &kp)?;
    println!("wrote {}-bit keypair to {}", kp.public.bits(), cli.out.display());
    Ok(())
}

fn synth_cmd(cli: &Cli) -> Result<()> {
    let mut c = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            match ExperimentConfig::from_toml(&text) {
                Ok(exp) => match exp.data {
                    fedgbt::orchestrator::DataSource::Synth { synth } => synth,
                    _ => return Err(Error::Config("the config's data source is not synthetic".into())),
                },
                Err(_) => SynthConfig::from_toml(&text)?,
            }
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    mkdir(&cli.out)?;
    for d in synth_generate(&c)? {
        let path = cli.out.join(format!("{}.csv", d.party));
        write_csv(&path, &d)?;
        println!("{}: {} samples", path.display(), d.len());
    }
    Ok(())
}

fn save_model(dir: &Path, name: &str, m: &BoostedEnsemble) -> Result<()> {
    write(&dir.join(name), &m.to_json())?;
    println!("{name}: {}", m.hash());
    Ok(())
}

fn train_cmd(cli: &Cli, regime: Regime) -> Result<()> {
    let c = cli.experiment()?;
    let p = c.effective_params();
    let dir = &cli.out;
    mkdir(dir)?;
    match (cli.scenario_data(&c)?, regime) {
        (ScenarioData::Horizontal(parties), Regime::Separate) => {
            for d in &parties {
                save_model(dir, &format!("model_{}.json", d.party), &train_centralized(d, &p, c.seed)?)?;
            }
        }
        (ScenarioData::Horizontal(parties), Regime::Centralized) => {
            let refs: Vec<&PartyDataset> = parties.iter().collect();
            let pooled = PartyDataset::concat("pooled", &refs)?;
            save_model(dir, "model.json", &train_centralized(&pooled, &p, c.seed)?)?;
        }
        (ScenarioData::Horizontal(parties), Regime::Federated) => {
            let names = parties.iter().map(|d| d.party.clone()).collect();
            let roster = HflRoster::new(names, c.secagg, c.key_bits, c.seed)?;
            let run = hfl_train(&parties, &p, &roster, c.seed)?;
            save_model(dir, "model.json", &run.model)?;
            write_transcript(&dir.join("transcript.jsonl"), &run.transcript)?;
            let scan = scan_transcript(&run.transcript, &ScanTargets::for_hfl(&parties, &run.audit))?;
            println!("transcript.jsonl: {}", scan.verdict());
        }
        (ScenarioData::Vertical { active, .. }, Regime::Separate) => {
            save_model(dir, &format!("model_{}.json", active.party), &train_centralized(&active, &p, c.seed)?)?;
        }
        (ScenarioData::Vertical { joined, .. }, Regime::Centralized) => {
            save_model(dir, "model.json", &train_centralized(&joined, &p, c.seed)?)?;
        }
        (ScenarioData::Vertical { active, passive, .. }, Regime::Federated) => {
            let roster = VflRoster::new(&active, &passive, c.key_bits)?;
            let run = vfl_train(&roster, &active, &passive, &p, c.seed)?;
            write(&dir.join("vfl_model.json"), &serde_json::to_string_pretty(&run.model)?)?;
            let tdir = dir.join("tables");
            mkdir(&tdir)?;
            for t in run.tables() {
                write(&tdir.join(format!("{}.json", t.party)), &serde_json::to_string_pretty(&t)?)?;
            }
            println!("vfl_model.json: {}", run.model.hash());
            // Joining every party's table is a simulation convenience for
            // `evaluate`; no single party could do this.
            save_model(dir, "model.json", &vfl_assemble(&run.model, &run.tables(), &roster)?)?;
            write_transcript(&dir.join("transcript.jsonl"), &run.transcript)?;
            let side: Vec<_> = passive.iter().cloned().zip(run.passive_tables.iter().cloned()).collect();
            let scan = scan_transcript(&run.transcript, &ScanTargets::for_vfl(&active, &side))?;
            println!("transcript.jsonl: {}", scan.verdict());
        }
    }
    Ok(())
}

fn tune_cmd(cli: &Cli, mode: TuneArg) -> Result<()> {
    let c = cli.experiment()?;
    let parties = c.data.load(cli.config_dir())?;
    let mode = match mode {
        TuneArg::Separate => TuneMode::Separate,
        TuneArg::Centralized => TuneMode::Centralized,
        TuneArg::Aggregated => TuneMode::FederatedAggregated,
    };
    let settings = TuneSettings {
        budget: c.bo_budget,
        valid_fraction: if c.valid_fraction > 0.0 { c.valid_fraction } else { 0.1 },
    };
    let tuned = tune_objective(mode, &parties, &c.effective_params(), &SearchSpace::default(), &settings, c.seed)?;
    mkdir(&cli.out)?;
    let text = serde_json::to_string_pretty(&tuned)?;
    write(&cli.out.join("tuned.json"), &text)?;
    for t in &tuned {
        let pairs: Vec<String> = t.names.iter().zip(&t.values).map(|(n, v)| format!("{n}={v}")).collect();
        println!("{}", pairs.join(" "));
    }
    Ok(())
}

fn evaluate_cmd(cli: &Cli, model: &Path, data: &[PathBuf]) -> Result<()> {
    let text = std::fs::read_to_string(model).map_err(|e| Error::io(model, e))?;
    let m = BoostedEnsemble::from_json(&text)?;
    let sets: Vec<PartyDataset> = if data.is_empty() {
        let c = cli.experiment()?;
        match cli.scenario_data(&c)? {
            ScenarioData::Horizontal(p) => p,
            ScenarioData::Vertical { joined, active, .. } => {
                if m.n_features == active.n_features() {
                    vec![active]
                } else {
                    vec![joined]
                }
            }
        }
    } else {
        let schema = well_schema();
        data.iter().map(|p| load_csv(p, &schema)).collect::<Result<_>>()?
    };
    let mut reports = Vec::new();
    for d in &sets {
        if d.n_features() != m.n_features {
            return Err(Error::Data(format!(
                "{} has {} features; the model expects {}",
                d.party,
                d.n_features(),
                m.n_features
            )));
        }
        let r = evaluate(&d.party, None, d.labels()?, &m.predict_proba(&d.features)?)?;
        println!(
            "{}: auc={:.4} acc={:.4} f1={:.4} precision={:.4} recall={:.4}",
            d.party, r.auc, r.accuracy, r.f1, r.precision, r.recall
        );
        reports.push(r);
    }
    mkdir(&cli.out)?;
    write(&cli.out.join("metrics.json"), &serde_json::to_string_pretty(&reports)?)
}

fn compare_cmd(cli: &Cli) -> Result<()> {
    let c = cli.experiment()?;
    let run = run_experiment(&c, cli.config_dir())?;
    write_report(&cli.out, &run)?;
    print!("{}", run.report.table_csv());
    for r in &run.report.regimes {
        if let fedgbt::orchestrator::RegimeStatus::Failed { error } = &r.status {
            eprintln!("{} failed: {error}", r.regime.as_str());
        }
    }
    println!("reports written to {}", cli.out.display());
    Ok(())
}

/// Returns whether the transcript scanned clean.
fn inspect_cmd(cli: &Cli, path: &Path) -> Result<bool> {
    let t = read_transcript(path)?;
    validate_transcript(&t)?;
    let c = cli.experiment()?;
    let vertical = t.iter().any(|e| e.kind == MessageKind::GradientBroadcast);
    let targets = match cli.scenario_data(&c)? {
        ScenarioData::Vertical { active, passive, .. } if vertical => {
            let side: Vec<_> = passive
                .into_iter()
                .map(|d| {
                    let table = fedgbt::fed_vfl::SplitLookupTable::new(&d.party);
                    (d, table)
                })
                .collect();
            ScanTargets::for_vfl(&active, &side)
        }
        ScenarioData::Horizontal(parties) if !vertical => ScanTargets::for_hfl(&parties, &[]),
        _ => {
            return Err(Error::Config(
                "the transcript's protocol does not match the config's scenario".into(),
            ))
        }
    };
    let report = scan_transcript(&t, &targets)?;
    for f in &report.findings {
        println!(
            "position {} {} -> {} {:?}: {:?} {}",
            f.position, f.sender, f.recipient, f.kind, f.finding, f.detail
        );
    }
    println!("{}", report.verdict());
    Ok(report.is_clean())
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Keygen => keygen_cmd(cli)?,
        Command::Synth => synth_cmd(cli)?,
        Command::Train { regime } => train_cmd(
            cli,
            match regime {
                RegimeArg::Separate => Regime::Separate,
                RegimeArg::Centralized => Regime::Centralized,
                RegimeArg::Federated => Regime::Federated,
            },
        )?,
        Command::Tune { mode } => tune_cmd(cli, *mode)?,
        Command::Evaluate { model, data } => evaluate_cmd(cli, model, data)?,
        Command::Compare => compare_cmd(cli)?,
        Command::InspectTranscript { transcript } => return inspect_cmd(cli, transcript),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
