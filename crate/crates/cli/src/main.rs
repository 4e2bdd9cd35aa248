use clap::{Parser, Subcommand};

use nbhd_cli::commands;
use nbhd_cli::scenario::Scenario;

/// Exact-arithmetic checks for Koszul resolutions, formal neighborhoods,
/// Thom-Whitney totalization and deformation obstructions, driven by
/// scenario files.
#[derive(Parser)]
#[command(name = "nbhd", version, about)]
struct Cli {
    /// Worker threads for independent checks (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Also write the report to this path.
    #[arg(long, global = true)]
    report: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify that the Koszul complex resolves the quotient ring.
    ResolveCheck {
        scenario: String,
        #[arg(long, default_value_t = 4)]
        wmax: i64,
    },
    /// Compare truncated de Rham cohomology with the infinitesimal
    /// neighborhoods.
    CeCheck {
        scenario: String,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, default_value_t = 4)]
        wmax: i64,
    },
    /// Diagonal filtration of the derived self-intersection.
    Selfint {
        scenario: String,
        #[arg(long, default_value_t = 3)]
        k: u32,
        #[arg(long, default_value_t = 3)]
        wmax: i64,
    },
    /// Tor dimensions of the doubled resolution.
    Tor {
        scenario: String,
        #[arg(long, default_value_t = 4)]
        wmax: i64,
    },
    /// Tangent algebroid, enveloping/jet comparison, endomorphism complex.
    Algebroid {
        scenario: String,
        #[arg(long, default_value_t = 2)]
        uea_order: u32,
        #[arg(long, default_value_t = 2)]
        jet_order: u32,
        #[arg(long, default_value_t = 3)]
        window: i64,
    },
    /// Thom-Whitney versus totalization battery.
    TwCheck {
        scenario: String,
        #[arg(long, default_value_t = 1)]
        nerve_depth: usize,
        #[arg(long, default_value_t = 2)]
        pmax: u32,
        #[arg(long, default_value_t = 4)]
        window: i64,
    },
    /// Randomized Maurer-Cartan/gauge laws and the cocycle correspondence.
    McCheck {
        scenario: String,
        #[arg(long, default_value_t = 60)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Obstruction towers for a chart-cover scenario.
    Obstruct {
        scenario: String,
        #[arg(long)]
        order: Option<u32>,
        #[arg(long, default_value_t = 8)]
        window: i64,
    },
}

fn load(path: &str) -> Result<Scenario, i32> {
    Scenario::load(path).map_err(|e| {
        eprintln!("{path}: {e}");
        2
    })
}

fn run() -> i32 {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global()
        {
            eprintln!("cannot configure worker pool: {e}");
        }
    }
    let report_path = cli.report.as_deref();
    let outcome = match cli.command {
        Command::ResolveCheck { scenario, wmax } => match load(&scenario) {
            Ok(sc) => commands::resolve_check(&sc, wmax),
            Err(code) => return code,
        },
        Command::CeCheck { scenario, k, wmax } => match load(&scenario) {
            Ok(sc) => commands::ce_check(&sc, k, wmax),
            Err(code) => return code,
        },
        Command::Selfint { scenario, k, wmax } => match load(&scenario) {
            Ok(sc) => commands::selfint(&sc, k, wmax),
            Err(code) => return code,
        },
        Command::Tor { scenario, wmax } => match load(&scenario) {
            Ok(sc) => commands::tor(&sc, wmax),
            Err(code) => return code,
        },
        Command::Algebroid { scenario, uea_order, jet_order, window } => {
            match load(&scenario) {
                Ok(sc) => commands::algebroid(&sc, uea_order, jet_order, window),
                Err(code) => return code,
            }
        }
        Command::TwCheck { scenario, nerve_depth, pmax, window } => {
            // the scenario is opened for uniformity of diagnostics even
            // though the battery is self-contained
            if let Err(code) = load(&scenario) {
                return code;
            }
            Ok(commands::tw_check(&scenario, nerve_depth, pmax, window))
        }
        Command::McCheck { scenario, instances, seed } => {
            if let Err(code) = load(&scenario) {
                return code;
            }
            Ok(commands::mc_check(&scenario, instances, seed))
        }
        Command::Obstruct { scenario, order, window } => match load(&scenario) {
            Ok(sc) => commands::obstruct(&sc, order, window),
            Err(code) => return code,
        },
    };
    match outcome {
        Ok(report) => commands::emit(&report, report_path),
        Err(e) => {
            eprintln!("{e}");
            2
        }
    }
}

fn main() {
    std::process::exit(run());
}
