use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mcalloc::harness::{
    comparison_methods, optimal_m2mgs, optimal_rca, run_comparison, run_sweep, write_comparison, write_sweep,
    ExperimentSpec, Metric, SweepGrid,
};
use mcalloc::scenario::{generate_scenario_with, ScenarioConfig};
use mcalloc::{allocate, AllocateOptions, LinkModel, Method, RcaConfig, Scenario, SetupClass, SolveOptions};

#[derive(Parser)]
#[command(name = "mcalloc", version, about = "Preallocation-based channel auctions for multi-connectivity networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a scenario and write it as JSON.
    Generate {
        #[arg(long, default_value = "ss", value_parser = parse_setup)]
        setup: SetupClass,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        link_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one allocation and print or save the result as JSON.
    Allocate {
        /// Scenario file; generated from --setup and --seed when absent.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "ss", value_parser = parse_setup)]
        setup: SetupClass,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        method: MethodName,
        #[command(flatten)]
        params: MethodParams,
        #[arg(long, default_value_t = 10.0)]
        timeout_s: f64,
        #[arg(long)]
        link_config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep M2MGS over q_T x q_ch in [2, 8]^2.
    SweepM2mgs(ExperimentArgs),
    /// Sweep RCA over q_BS in [2, 8] and n_chpBS up to the setup cap.
    SweepRca(ExperimentArgs),
    /// Compare the simple methods with tuned M2MGS and RCA.
    Compare {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[command(flatten)]
        params: MethodParams,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// ExperimentSpec JSON; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_setup)]
    setup: Option<SetupClass>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timeout_s: Option<f64>,
    #[arg(long)]
    link_config: Option<PathBuf>,
}

#[derive(Args, Default)]
struct MethodParams {
    #[arg(long)]
    q_t: Option<usize>,
    #[arg(long)]
    q_ch: Option<usize>,
    #[arg(long)]
    q_bs: Option<usize>,
    #[arg(long)]
    n_chpbs: Option<usize>,
    #[arg(long)]
    min_ch: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodName {
    R,
    Db,
    Scvb,
    Dbsr,
    Scvbsr,
    M2mgs,
    Rca,
}

fn parse_setup(s: &str) -> Result<SetupClass, String> {
    s.parse().map_err(|e: mcalloc::Error| e.to_string())
}

fn load_link(path: Option<&Path>) -> Result<LinkModel> {
    match path {
        None => Ok(LinkModel::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(LinkModel::from_json(&text)?)
        }
    }
}

impl MethodParams {
    fn m2mgs(&self, setup: SetupClass) -> Result<Method> {
        if self.q_bs.is_some() || self.n_chpbs.is_some() || self.min_ch.is_some() {
            bail!("--q-bs, --n-chpbs and --min-ch apply to RCA only");
        }
        let Method::M2MGS { q_t, q_ch } = optimal_m2mgs(setup) else { unreachable!() };
        Ok(Method::m2mgs(self.q_t.unwrap_or(q_t), self.q_ch.unwrap_or(q_ch)))
    }

    fn rca(&self, setup: SetupClass) -> Result<Method> {
        if self.q_t.is_some() || self.q_ch.is_some() {
            bail!("--q-t and --q-ch apply to M2MGS only");
        }
        let Method::RCA(base) = optimal_rca(setup) else { unreachable!() };
        let mut cfg = RcaConfig::new(self.q_bs.unwrap_or(base.q_bs), self.n_chpbs.unwrap_or(base.n_chpbs));
        if let Some(m) = self.min_ch {
            cfg.min_channels = m;
        }
        Ok(Method::RCA(cfg))
    }

    fn is_empty(&self) -> bool {
        self.q_t.is_none() && self.q_ch.is_none() && self.q_bs.is_none() && self.n_chpbs.is_none() && self.min_ch.is_none()
    }

    fn method(&self, name: MethodName, setup: SetupClass) -> Result<Method> {
        let simple = match name {
            MethodName::M2mgs => return self.m2mgs(setup),
            MethodName::Rca => return self.rca(setup),
            MethodName::R => Method::R,
            MethodName::Db => Method::DB,
            MethodName::Scvb => Method::SCVB,
            MethodName::Dbsr => Method::DBSR,
            MethodName::Scvbsr => Method::SCVBSR,
        };
        if !self.is_empty() {
            bail!("method parameters apply to M2MGS and RCA only");
        }
        Ok(simple)
    }
}

impl ExperimentArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ExperimentSpec::new(SetupClass::SS, Vec::new(), 1, 0),
        };
        if let Some(s) = self.setup {
            spec.setup = s;
        }
        if let Some(n) = self.runs {
            spec.n_runs = n;
        }
        if let Some(s) = self.seed {
            spec.base_seed = s;
        }
        if let Some(t) = self.timeout_s {
            spec.timeout_s = Some(t);
        }
        if self.link_config.is_some() {
            spec.link = load_link(self.link_config.as_deref())?;
        }
        if let Some(o) = &self.out {
            spec.output = Some(o.clone());
        }
        Ok(spec)
    }
}

fn out_dir(spec: &ExperimentSpec) -> PathBuf {
    spec.output.clone().unwrap_or_else(|| PathBuf::from("results"))
}

fn sweep(args: &ExperimentArgs, rca: bool) -> Result<()> {
    let spec = args.spec()?;
    let grid = if rca { SweepGrid::rca_default(spec.setup) } else { SweepGrid::m2mgs_default() };
    let result = run_sweep(&spec, &grid)?;
    let files = write_sweep(&out_dir(&spec), &result)?;
    let (row_axis, col_axis) = grid.axes();
    println!("{} mean total utility, {} runs per cell", spec.setup.name(), spec.n_runs);
    print!("{row_axis}\\{col_axis}");
    for c in grid.cols() {
        print!("\t{c}");
    }
    println!();
    for &r in grid.rows() {
        print!("{r}");
        for &c in grid.cols() {
            match result.stat(r, c, Metric::TotalUtility) {
                Some(s) => print!("\t{:.3}", s.mean),
                None => print!("\t-"),
            }
        }
        println!();
    }
    println!("wrote {} files to {}", files.len(), out_dir(&spec).display());
    Ok(())
}

fn compare(args: &ExperimentArgs, params: &MethodParams) -> Result<()> {
    let mut spec = args.spec()?;
    if spec.methods.is_empty() {
        let mut methods = comparison_methods(spec.setup);
        let n = methods.len();
        methods[n - 2] = params.m2mgs_only(spec.setup)?;
        methods[n - 1] = params.rca_only(spec.setup)?;
        spec.methods = methods;
    } else if !params.is_empty() {
        bail!("method parameters cannot be combined with a config that lists methods");
    }
    let result = run_comparison(&spec)?;
    let files = write_comparison(&out_dir(&spec), &result)?;
    println!("{} comparison, {} runs", spec.setup.name(), spec.n_runs);
    println!("method\tmean U\tmedian U\tmean prealloc s\tnon-optimal");
    for (i, m) in result.methods.iter().enumerate() {
        let u = result.stat(i, Metric::TotalUtility);
        let t = result.stat(i, Metric::PreallocTime).map_or(f64::NAN, |s| s.mean);
        let nonopt = result.records.iter().filter(|r| r.cell == i && !r.solver_optimal).count();
        match u {
            Some(u) => println!("{m}\t{:.3}\t{:.3}\t{t:.4}\t{nonopt}", u.mean, u.median),
            None => println!("{m}\t-\t-\t{t:.4}\t{nonopt}"),
        }
    }
    println!("wrote {} files to {}", files.len(), out_dir(&spec).display());
    Ok(())
}

impl MethodParams {
    // in a comparison each family only sees its own flags
    fn m2mgs_only(&self, setup: SetupClass) -> Result<Method> {
        MethodParams { q_t: self.q_t, q_ch: self.q_ch, ..Default::default() }.m2mgs(setup)
    }

    fn rca_only(&self, setup: SetupClass) -> Result<Method> {
        MethodParams { q_bs: self.q_bs, n_chpbs: self.n_chpbs, min_ch: self.min_ch, ..Default::default() }.rca(setup)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Generate { setup, seed, link_config, out } => {
            let link = load_link(link_config.as_deref())?;
            let sc = generate_scenario_with(setup, seed, &ScenarioConfig::default(), &link)?;
            sc.save(&out)?;
            println!(
                "{} scenario, seed {seed}: {} tenants, {} BSs, {} channels -> {}",
                setup.name(),
                sc.n_tenants(),
                sc.n_bs(),
                sc.n_channels(),
                out.display()
            );
        }
        Cmd::Allocate { scenario, setup, seed, method, params, timeout_s, link_config, out } => {
            let link = load_link(link_config.as_deref())?;
            let sc = match scenario {
                Some(p) => Scenario::load(&p).with_context(|| format!("loading {}", p.display()))?,
                None => generate_scenario_with(setup, seed, &ScenarioConfig::default(), &link)?,
            };
            let method = params.method(method, sc.setup().unwrap_or(setup))?;
            if !(timeout_s >= 0.0 && timeout_s.is_finite()) {
                bail!("--timeout-s must be finite and non-negative");
            }
            let opts = AllocateOptions {
                solve: SolveOptions { timeout: Some(std::time::Duration::from_secs_f64(timeout_s)), ..SolveOptions::default() },
                ..AllocateOptions::default()
            };
            let res = allocate(&sc, &link, &method, seed, &opts)?;
            let json = res.to_json()?;
            match out {
                Some(p) => {
                    std::fs::write(&p, json)?;
                    println!(
                        "{method}: total utility {:.4}, optimal {}, prealloc {:.4} s -> {}",
                        res.total_utility(),
                        res.solver_optimal,
                        res.timings.prealloc_s,
                        p.display()
                    );
                }
                None => println!("{json}"),
            }
        }
        Cmd::SweepM2mgs(args) => sweep(&args, false)?,
        Cmd::SweepRca(args) => sweep(&args, true)?,
        Cmd::Compare { exp, params } => compare(&exp, &params)?,
    }
    Ok(())
}
