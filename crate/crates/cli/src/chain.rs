//! Map chains: `op[:key=value]*` joined by commas, e.g.
//! `subtract_bs:theta=0.1:detector=on-off,displace:re=1`.

use std::collections::BTreeMap;

use fockbench::cond::{
    add_bs, add_ideal, add_pdc, homodyne_condition, jc_add, jc_subtract, scissors, subtract_bs, subtract_ideal,
    DetectorModel,
};
use fockbench::linalg::c;
use fockbench::{ops, Mode, State, StateRef};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    SubtractIdeal,
    AddIdeal,
    SubtractBs { theta: f64, detector: DetectorModel },
    AddBs { theta: f64 },
    AddPdc { zeta: f64 },
    JcAdd { lambda_t: f64 },
    JcSubtract { lambda_t: f64 },
    Scissors,
    Displace { re: f64, im: f64, mode: Option<Mode> },
    Squeeze { zeta: f64, mode: Option<Mode> },
    Beamsplit { theta: f64, phi: f64 },
    Homodyne { x: f64, mode: Mode },
}

struct Params<'a> {
    op: &'a str,
    kv: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn parse(op: &'a str, items: impl Iterator<Item = &'a str>) -> Result<Self, CliError> {
        let mut kv = BTreeMap::new();
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{op}: expected key=value, got `{item}`")))?;
            if kv.insert(k, v).is_some() {
                return Err(CliError::Usage(format!("{op}: `{k}` given twice")));
            }
        }
        Ok(Self { op, kv })
    }

    fn num(&mut self, key: &str, default: Option<f64>) -> Result<f64, CliError> {
        match self.kv.remove(key) {
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("{}: `{key}={v}` is not a number", self.op))),
            None => default.ok_or_else(|| CliError::Usage(format!("{}: missing `{key}`", self.op))),
        }
    }

    fn mode(&mut self) -> Result<Option<Mode>, CliError> {
        match self.kv.remove("mode") {
            None => Ok(None),
            Some("a") => Ok(Some(Mode::A)),
            Some("b") => Ok(Some(Mode::B)),
            Some(v) => Err(CliError::Usage(format!("{}: mode must be a or b, got `{v}`", self.op))),
        }
    }

    fn detector(&mut self) -> Result<DetectorModel, CliError> {
        let eta = self.kv.remove("eta");
        let kind = self.kv.remove("detector").unwrap_or("ideal");
        let model = match (kind, eta) {
            ("ideal", None) => DetectorModel::ideal(),
            ("on-off", None) => DetectorModel::on_off(),
            ("inefficient", Some(e)) => {
                let e: f64 = e.parse().map_err(|_| CliError::Usage(format!("{}: `eta={e}` is not a number", self.op)))?;
                DetectorModel::inefficient(e)?
            }
            ("inefficient", None) => return Err(CliError::Usage(format!("{}: inefficient detector needs `eta`", self.op))),
            (_, Some(_)) => return Err(CliError::Usage(format!("{}: `eta` only applies to detector=inefficient", self.op))),
            (k, None) => return Err(CliError::Usage(format!("{}: unknown detector `{k}`", self.op))),
        };
        Ok(model)
    }

    fn finish(self) -> Result<(), CliError> {
        match self.kv.keys().next() {
            Some(k) => Err(CliError::Usage(format!("{}: unknown key `{k}`", self.op))),
            None => Ok(()),
        }
    }
}

pub fn parse(chain: &str) -> Result<Vec<Step>, CliError> {
    let mut steps = Vec::new();
    for part in chain.split(',') {
        let mut it = part.trim().split(':');
        let op = it.next().unwrap_or_default();
        let mut p = Params::parse(op, it)?;
        let step = match op {
            "subtract_ideal" => Step::SubtractIdeal,
            "add_ideal" => Step::AddIdeal,
            "subtract_bs" => Step::SubtractBs { theta: p.num("theta", None)?, detector: p.detector()? },
            "add_bs" => Step::AddBs { theta: p.num("theta", None)? },
            "add_pdc" => Step::AddPdc { zeta: p.num("zeta", None)? },
            "jc_add" => Step::JcAdd { lambda_t: p.num("lt", None)? },
            "jc_subtract" => Step::JcSubtract { lambda_t: p.num("lt", None)? },
            "scissors" => Step::Scissors,
            "displace" => Step::Displace { re: p.num("re", Some(0.0))?, im: p.num("im", Some(0.0))?, mode: p.mode()? },
            "squeeze" => Step::Squeeze { zeta: p.num("zeta", None)?, mode: p.mode()? },
            "beamsplit" => Step::Beamsplit { theta: p.num("theta", None)?, phi: p.num("phi", Some(0.0))? },
            "homodyne" => Step::Homodyne { x: p.num("x", Some(0.0))?, mode: p.mode()?.unwrap_or(Mode::B) },
            "" => return Err(CliError::Usage("empty step in chain".into())),
            other => return Err(CliError::Usage(format!("unknown chain step `{other}`"))),
        };
        p.finish()?;
        steps.push(step);
    }
    Ok(steps)
}

fn local(op: &ops::OperatorMatrix, mode: Option<Mode>, st: &State) -> Result<State, CliError> {
    Ok(match (st.dims().modes(), mode) {
        (1, None) => ops::apply(op, st)?,
        (2, Some(m)) => ops::apply_local(op, m, st)?,
        (1, Some(_)) => return Err(CliError::Usage("`mode` only applies to two-mode states".into())),
        _ => return Err(CliError::Usage("two-mode state: give mode=a or mode=b".into())),
    })
}

fn mode_dim(st: &State, mode: Option<Mode>) -> Result<usize, CliError> {
    Ok(match (st.dims(), mode) {
        (fockbench::Dims::One(d), _) => d,
        (fockbench::Dims::Two(a, _), Some(Mode::A)) => a,
        (fockbench::Dims::Two(_, b), Some(Mode::B)) => b,
        (fockbench::Dims::Two(..), None) => return Err(CliError::Usage("two-mode state: give mode=a or mode=b".into())),
    })
}

/// Runs the chain; the returned weight is the product of the step weights.
pub fn run(steps: &[Step], mut st: State) -> Result<(State, f64), CliError> {
    let mut weight = 1.0;
    for step in steps {
        let r = match step {
            Step::SubtractIdeal => subtract_ideal(&st)?,
            Step::AddIdeal => add_ideal(&st)?,
            Step::SubtractBs { theta, detector } => subtract_bs(&st, *theta, *detector)?,
            Step::AddBs { theta } => add_bs(&st, *theta)?,
            Step::AddPdc { zeta } => add_pdc(&st, *zeta)?,
            Step::JcAdd { lambda_t } => jc_add(&st, *lambda_t)?,
            Step::JcSubtract { lambda_t } => jc_subtract(&st, *lambda_t)?,
            Step::Scissors => {
                let psi = st.as_pure().ok_or_else(|| CliError::Usage("scissors needs a pure state".into()))?;
                scissors(psi)?
            }
            Step::Homodyne { x, mode } => {
                let psi = st.as_pure().ok_or_else(|| CliError::Usage("homodyne needs a pure two-mode state".into()))?;
                homodyne_condition(psi, *mode, *x)?
            }
            Step::Displace { re, im, mode } => {
                let d = ops::displacement(c(*re, *im), mode_dim(&st, *mode)?)?;
                st = local(&d, *mode, &st)?;
                continue;
            }
            Step::Squeeze { zeta, mode } => {
                let s = ops::squeeze1(*zeta, mode_dim(&st, *mode)?)?;
                st = local(&s, *mode, &st)?;
                continue;
            }
            Step::Beamsplit { theta, phi } => {
                let dims = st.dims().pair()?;
                st = ops::apply(&ops::beamsplitter(*theta, *phi, dims), &st)?;
                continue;
            }
        };
        weight *= r.probability;
        st = r.state;
    }
    Ok((st, weight))
}
