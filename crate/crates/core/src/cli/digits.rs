use std::fmt::Write as _;

use clap::Args;
use num_bigint::BigUint;
use serde::Serialize;

use cf_limits_lab::cf_core::{convergent_states, derived_vars, digits_of_real, Digit, ExactPoint};
use cf_limits_lab::Error;

use super::{csv_body, CliResult, Output, Report};

#[derive(Args, Debug, Serialize)]
pub struct DigitsArgs {
    /// Rational input P/Q with 0 < P < Q.
    #[arg(long, conflicts_with = "real", required_unless_present = "real")]
    pub frac: Option<String>,
    /// Float input in (0, 1).
    #[arg(long)]
    pub real: Option<f64>,
    /// Maximum number of digits.
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    /// Also print the convergents and derived variables.
    #[arg(long)]
    pub table: bool,
}

#[derive(Serialize)]
struct Row {
    n: usize,
    a: Digit,
    p: String,
    q: String,
    r: f64,
    y: f64,
    u: f64,
    reliable: bool,
}

#[derive(Serialize)]
struct DigitsReport {
    input: String,
    digits: Vec<Digit>,
    /// The expansion continues past the listed digits.
    truncated: bool,
    /// Digits trusted for a float input.
    horizon: Option<usize>,
    convergents: Vec<Row>,
}

fn parse_frac(s: &str) -> CliResult<ExactPoint> {
    let bad = || Error::Parse { offset: 0, message: format!("expected P/Q, got '{s}'") };
    let (p, q) = s.split_once('/').ok_or_else(bad)?;
    let p: BigUint = p.trim().parse().map_err(|_| bad())?;
    let q: BigUint = q.trim().parse().map_err(|_| bad())?;
    Ok(ExactPoint::new(p, q)?)
}

pub fn run(a: DigitsArgs, out: &Output) -> CliResult<()> {
    if a.n == 0 {
        return Err(Error::Config("--n must be at least 1".into()).into());
    }
    let (x, digits, truncated, horizon, input) = match (&a.frac, a.real) {
        (Some(f), _) => {
            let x = parse_frac(f)?;
            let rd = x.digits(a.n)?;
            (x, rd.digits, rd.truncated, None, f.clone())
        }
        (None, Some(r)) => {
            let rd = digits_of_real(r, a.n)?;
            if rd.horizon < rd.digits.len() {
                eprintln!("warning: only the first {} digits are reliable in double precision", rd.horizon);
            }
            (ExactPoint::from_f64(r)?, rd.digits, true, Some(rd.horizon), r.to_string())
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let states = convergent_states(&digits);
    let rows: Vec<Row> = if a.table {
        let dv = derived_vars(&x, &digits, &states, horizon.unwrap_or(usize::MAX))?;
        dv.into_iter()
            .map(|v| Row {
                n: v.n,
                a: v.digit,
                p: states[v.n].p_cur.to_string(),
                q: states[v.n].q_cur.to_string(),
                r: v.r,
                y: v.y,
                u: v.u,
                reliable: v.reliable,
            })
            .collect()
    } else {
        vec![]
    };

    let mut text = digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ");
    text.push('\n');
    if a.table {
        text.push_str("n\ta_n\tp_n\tq_n\tr_n\ty_n\tu_n\n");
        for r in &rows {
            let flag = if r.reliable { "" } else { "\t*" };
            let _ = writeln!(text, "{}\t{}\t{}\t{}\t{:.9}\t{:.9}\t{:.9}{flag}", r.n, r.a, r.p, r.q, r.r, r.y, r.u);
        }
    }
    let csv = csv_body(
        "n,a_n,p_n,q_n,r_n,y_n,u_n,reliable",
        if a.table {
            rows.iter()
                .map(|r| format!("{},{},{},{},{},{},{},{}", r.n, r.a, r.p, r.q, r.r, r.y, r.u, r.reliable))
                .collect::<Vec<_>>()
        } else {
            digits.iter().enumerate().map(|(i, d)| format!("{},{d},,,,,,", i + 1)).collect()
        },
    );
    let report = DigitsReport { input, digits, truncated, horizon, convergents: rows };
    out.emit(Report { config: &a, json: &report, text, csv: Some(csv) })
}
