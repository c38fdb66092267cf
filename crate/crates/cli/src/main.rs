//! `fockbench` command-line front end.
//!
//! Exit status: 0 on success, 1 for invalid input, 2 when a computation fails
//! numerically (vanishing state, divergent series, truncation in strict mode).

mod chain;
mod reproduce;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fockbench::config::{self, DEFAULT_SINGLE_DIM, DEFAULT_TWO_MODE_DIM};
use fockbench::engineer::{dakna_plan, dakna_run, dakna_run_bs, kitten_scan};
use fockbench::entangle::{entanglement_report, subtracted_states, Subtraction};
use fockbench::fock::partial_trace;
use fockbench::format::sig17;
use fockbench::phasespace::{
    p_analytic_thermal, qfunc_grid, quasi_grid, wigner_grid, PhaseGrid, SParameter, ThermalSequence, Window,
};
use fockbench::stats::{cat, coherent, pnd, squeezed_vacuum, thermal, tmsv};
use fockbench::{FockVector, Mode, State, StateRef, C64};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] fockbench::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

type Res<T> = Result<T, CliError>;

/// One batch job: a subcommand with its parameters.
#[derive(Debug, Parser)]
#[command(name = "fockbench", version, about = "Photon addition, subtraction and phase-space tools on truncated Fock spaces")]
pub struct JobSpec {
    /// Levels kept per mode (default 65 single-mode, 41 per mode for two-mode states).
    #[arg(long, global = true, env = "FOCKBENCH_DIM", value_parser = clap::value_parser!(u64).range(2..=512))]
    dim: Option<u64>,
    /// Phase-space window `half[,n]` or `x_min,x_max,y_min,y_max[,nx[,ny]]`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat truncation warnings as errors.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a state and write it as JSON.
    State(StateArgs),
    /// Build a state, run a map chain and write the result with its herald weight.
    Apply(StateArgs),
    /// Wigner function on a grid (CSV).
    Wigner(StateArgs),
    /// Husimi Q function on a grid (CSV).
    Qfunc(StateArgs),
    /// s-ordered quasiprobability on a grid (CSV); s = 1 needs --analytic.
    Pfunc(PfuncArgs),
    /// Photon-number distribution (CSV).
    Pnd(PndArgs),
    /// Entanglement report of a two-mode state (JSON).
    Entangle(StateArgs),
    /// Kitten fidelity surface over squeezing and cat amplitude (CSV).
    KittenScan(KittenArgs),
    /// Displaced-addition synthesis of a Fock superposition (JSON).
    Dakna(DaknaArgs),
    /// Regenerate a figure's data or the headline numbers.
    Reproduce {
        #[arg(value_enum)]
        target: reproduce::Target,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StateKind {
    Vacuum,
    Fock,
    Coherent,
    Thermal,
    Squeezed,
    Cat,
    Tmsv,
    Subtracted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    BothModes,
    OneMode,
    Delocalized,
}

#[derive(Clone, Debug, Args)]
struct StateArgs {
    /// Kind of state to build.
    #[arg(long, value_enum, conflicts_with = "input")]
    state: Option<StateKind>,
    /// Read the state from a JSON file written by `state` or `apply`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Photon number for `fock`.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Coherent or cat amplitude, e.g. `2` or `1+0.5i`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    beta: C64,
    /// Cat phase: 0 even, π odd.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi: f64,
    /// Squeezing parameter.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    zeta: f64,
    /// Thermal mean photon number.
    #[arg(long, default_value_t = 1.0)]
    nbar: f64,
    /// Which subtraction for `subtracted`.
    #[arg(long, value_enum, default_value = "both-modes")]
    which: Which,
    /// Map chain, e.g. `subtract_bs:theta=0.1:detector=on-off,displace:re=1`.
    #[arg(long)]
    chain: Option<String>,
}

#[derive(Debug, Args)]
struct PndArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Mode whose marginal is used for two-mode states.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Keep rows whose probability is exactly zero.
    #[arg(long)]
    all: bool,
}

#[derive(Debug, Args)]
struct PfuncArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Ordering parameter; numeric evaluation needs s <= 0.9.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    s: f64,
    /// Closed-form P function of a thermal state after `as` (subtract, add) or `sa` (add, subtract); uses --nbar.
    #[arg(long, value_parser = parse_sequence)]
    analytic: Option<ThermalSequence>,
}

#[derive(Debug, Args)]
struct KittenArgs {
    /// Squeezing values `start:stop:step`.
    #[arg(long, default_value = "0.1:1:0.05")]
    zetas: String,
    /// Cat amplitudes `start:stop:step`.
    #[arg(long, default_value = "0.5:3:0.02")]
    betas: String,
}

#[derive(Debug, Args)]
struct DaknaArgs {
    /// Target coefficients c0,c1,...,cN, each real or complex (`0.3-0.2i`).
    #[arg(long, allow_hyphen_values = true)]
    coeffs: String,
    /// Also run with beam-splitter displacements of this amplitude transmissivity.
    #[arg(long)]
    bs_t: Option<f64>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "a" => Ok(Mode::A),
        "b" => Ok(Mode::B),
        _ => Err(format!("mode must be a or b, got `{s}`")),
    }
}

fn parse_sequence(s: &str) -> Result<ThermalSequence, String> {
    match s {
        "as" => Ok(ThermalSequence::SubtractThenAdd),
        "sa" => Ok(ThermalSequence::AddThenSubtract),
        _ => Err(format!("sequence must be as or sa, got `{s}`")),
    }
}

/// Inclusive `start:stop:step` range.
fn parse_range(s: &str) -> Res<Vec<f64>> {
    let bad = || CliError::Usage(format!("range `{s}` must be start:stop:step with step > 0"));
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, h] = parts[..] else { return Err(bad()) };
    if !(h > 0.0 && b >= a) {
        return Err(bad());
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(CliError::Usage(format!("range `{s}` has too many points")));
    }
    Ok((0..=n).map(|k| a + k as f64 * h).collect())
}

fn parse_coeffs(s: &str) -> Res<Vec<C64>> {
    s.split(',')
        .map(|t| t.trim().parse::<C64>().map_err(|_| CliError::Usage(format!("bad coefficient `{t}`"))))
        .collect()
}

fn parse_window(s: &str) -> Res<Window> {
    let bad = || CliError::Usage(format!("window `{s}` must be `half[,n]` or `x_min,x_max,y_min,y_max[,nx[,ny]]`"));
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let count = |x: f64| if x.fract() == 0.0 && (2.0..=4001.0).contains(&x) { Ok(x as usize) } else { Err(bad()) };
    let w = match v[..] {
        [h] if h > 0.0 => Window::square(h, 201)?,
        [h, n] if h > 0.0 => Window::square(h, count(n)?)?,
        [a, b, c, d] => Window::new((a, b), (c, d), 201, 201)?,
        [a, b, c, d, n] => Window::new((a, b), (c, d), count(n)?, count(n)?)?,
        [a, b, c, d, nx, ny] => Window::new((a, b), (c, d), count(nx)?, count(ny)?)?,
        _ => return Err(bad()),
    };
    Ok(w)
}

struct Ctx {
    dim: Option<usize>,
    window: Option<Window>,
}

impl Ctx {
    fn single(&self) -> usize {
        self.dim.unwrap_or(DEFAULT_SINGLE_DIM)
    }

    fn pair(&self) -> (usize, usize) {
        let d = self.dim.unwrap_or(DEFAULT_TWO_MODE_DIM);
        (d, d)
    }

    fn window_for(&self, st: &State) -> Res<Window> {
        match self.window {
            Some(w) => Ok(w),
            None => Ok(Window::covering(st)?),
        }
    }
}

fn build(args: &StateArgs, ctx: &Ctx) -> Res<(State, f64)> {
    let st: State = match (&args.input, args.state) {
        (Some(path), _) => read_state(&fs::read_to_string(path)?)?,
        (None, None) => return Err(CliError::Usage("give --state or --input".into())),
        (None, Some(kind)) => {
            let d = ctx.single();
            match kind {
                StateKind::Vacuum => FockVector::vacuum(d).into(),
                StateKind::Fock => {
                    if args.n >= d {
                        return Err(CliError::Usage(format!("fock n = {} needs dim > {}", args.n, args.n)));
                    }
                    FockVector::fock(args.n, d).into()
                }
                StateKind::Coherent => coherent(args.beta, d)?.into(),
                StateKind::Thermal => thermal(args.nbar, d)?.into(),
                StateKind::Squeezed => squeezed_vacuum(args.zeta, d)?.into(),
                StateKind::Cat => cat(args.beta, args.phi, d)?.into(),
                StateKind::Tmsv => tmsv(args.zeta, ctx.pair())?.into(),
                StateKind::Subtracted => {
                    let which = match args.which {
                        Which::BothModes => Subtraction::BothModes,
                        Which::OneMode => Subtraction::OneMode,
                        Which::Delocalized => Subtraction::Delocalized,
                    };
                    subtracted_states(args.zeta, which, ctx.pair())?.into()
                }
            }
        }
    };
    match &args.chain {
        Some(ch) => chain::run(&chain::parse(ch)?, st),
        None => Ok((st, 1.0)),
    }
}

/// Accepts the output of `state` as well as the wrapped output of `apply`.
fn read_state(text: &str) -> Res<State> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("state file is not JSON: {e}")))?;
    let inner = match v.get("state") {
        Some(s) => s.to_string(),
        None => text.to_string(),
    };
    Ok(State::from_json(&inner)?)
}

fn state_json(st: &State) -> serde_json::Value {
    serde_json::from_str(&st.to_json()).expect("state JSON round-trips")
}

fn run(job: JobSpec) -> Res<String> {
    config::set_strict(job.strict);
    let ctx = Ctx {
        dim: job.dim.map(|d| d as usize),
        window: job.window.as_deref().map(parse_window).transpose()?,
    };
    let out = match &job.command {
        Command::State(a) => {
            let (st, _) = build(a, &ctx)?;
            serde_json::to_string_pretty(&state_json(&st)).expect("json") + "\n"
        }
        Command::Apply(a) => {
            if a.chain.is_none() {
                return Err(CliError::Usage("apply needs --chain".into()));
            }
            let (st, w) = build(a, &ctx)?;
            let v = serde_json::json!({ "herald_weight": w, "state": state_json(&st) });
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
        Command::Wigner(a) => {
            let (st, _) = build(a, &ctx)?;
            wigner_grid(&st, ctx.window_for(&st)?)?.to_csv()
        }
        Command::Qfunc(a) => {
            let (st, _) = build(a, &ctx)?;
            qfunc_grid(&st, ctx.window_for(&st)?)?.to_csv()
        }
        Command::Pfunc(p) => match p.analytic {
            Some(seq) => {
                if p.state.state.is_some() || p.state.input.is_some() || p.state.chain.is_some() {
                    return Err(CliError::Usage("--analytic builds its own state; drop --state/--input/--chain".into()));
                }
                if p.s != 1.0 {
                    return Err(CliError::Usage("--analytic gives the s = 1 function only".into()));
                }
                let w = ctx.window.unwrap_or(reproduce::thermal_p_window());
                let nbar = p.state.nbar;
                PhaseGrid::evaluate(w, 1.0, |a| p_analytic_thermal(seq, nbar, a))?.to_csv()
            }
            None => {
                let s = SParameter::new(p.s)?;
                let (st, _) = build(&p.state, &ctx)?;
                quasi_grid(&st, ctx.window_for(&st)?, s)?.to_csv()
            }
        },
        Command::Pnd(p) => {
            let (st, _) = build(&p.state, &ctx)?;
            let dist = match (st.dims().modes(), p.mode) {
                (1, None) => pnd(&st)?,
                (2, Some(m)) => pnd(&partial_trace(&st, m)?)?,
                (2, None) => return Err(CliError::Usage("two-mode state: give --mode a or --mode b".into())),
                _ => return Err(CliError::Usage("--mode only applies to two-mode states".into())),
            };
            let mut s = String::from("n,probability\n");
            for (n, pr) in dist.probs.iter().enumerate() {
                if p.all || *pr != 0.0 {
                    s.push_str(&format!("{n},{}\n", sig17(*pr)));
                }
            }
            s
        }
        Command::Entangle(a) => {
            let mut a2 = a.clone();
            if a2.state.is_none() && a2.input.is_none() {
                a2.state = Some(StateKind::Tmsv);
            }
            let (st, _) = build(&a2, &ctx)?;
            serde_json::to_string_pretty(&entanglement_report(&st)?).expect("json") + "\n"
        }
        Command::KittenScan(k) => {
            let (zetas, betas) = (parse_range(&k.zetas)?, parse_range(&k.betas)?);
            let pts = kitten_scan(&zetas, &betas, ctx.single())?;
            let mut s = String::from("zeta,beta,fidelity\n");
            for p in pts {
                s.push_str(&format!("{},{},{}\n", sig17(p.zeta), sig17(p.beta), sig17(p.fidelity)));
            }
            s
        }
        Command::Dakna(a) => {
            let coeffs = parse_coeffs(&a.coeffs)?;
            let d = ctx.single();
            if coeffs.len() > d {
                return Err(CliError::Usage(format!("{} coefficients need dim >= {}", coeffs.len(), coeffs.len())));
            }
            let plan = dakna_plan(&coeffs)?;
            let mut tv = fockbench::CVec::zeros(d);
            for (k, z) in coeffs.iter().enumerate() {
                tv[k] = *z;
            }
            let target = FockVector::new(tv);
            let out = dakna_run(&plan, d)?;
            let mut v = serde_json::json!({
                "dim": d,
                "plan": plan,
                "fidelity": fockbench::phasespace::fidelity(&target, &out)?,
                "state": state_json(&out.into()),
            });
            if let Some(t) = a.bs_t {
                let rho = dakna_run_bs(&plan, d, t)?;
                v["beam_splitter"] =
                    serde_json::json!({ "t": t, "fidelity": fockbench::phasespace::fidelity(&target, &rho)? });
            }
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
        Command::Reproduce { target } => reproduce::run(*target, ctx.dim, ctx.window)?,
    };
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let job = match JobSpec::try_parse() {
        Ok(j) => j,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out_path = job.out.clone();
    match run(job) {
        Ok(text) => {
            let res = match out_path {
                Some(p) => fs::write(p, text),
                None => std::io::stdout().lock().write_all(text.as_bytes()),
            };
            match res {
                Ok(()) => ExitCode::SUCCESS,
                // downstream reader closed early, e.g. `| head`
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
