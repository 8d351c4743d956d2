//! Fixed-schema CSV emission. Numbers use 17 significant digits in scientific
//! notation; absent values are empty fields.

use std::fmt::Write;

use super::{CatMap, FidelityTrace, SweepRecord};
use crate::metrics::MetricsRecord;

pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn reid(m: &MetricsRecord, order: (u32, u32)) -> Option<f64> {
    m.reid.iter().find(|r| (r.0, r.1) == order).map(|r| r.2)
}

fn param(m: &MetricsRecord, name: &str) -> Option<f64> {
    m.params.iter().find(|p| p.0 == name).map(|p| p.1)
}

fn flag(b: bool) -> &'static str {
    if b { "1" } else { "0" }
}

pub const TRACE_HEADER: &str = "t,F,leakage,trace_drift,leakage_warning";

pub fn trace_csv(trace: &FidelityTrace) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for p in &trace.points {
        let warn = p.leakage > crate::fock::LEAKAGE_WARN;
        let _ = writeln!(out, "{},{},{},{},{}", num(p.t), num(p.fidelity), num(p.leakage), num(p.trace_drift), flag(warn));
    }
    out
}

pub const ZETA_HEADER: &str = "zeta,F,N,R_r,W_min,E_r11,E_r22,E_f,leakage,leakage_warning";

pub fn zeta_csv(records: &[SweepRecord]) -> String {
    let mut out = format!("{ZETA_HEADER}\n");
    for r in records {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            opt(param(m, "zeta")),
            opt(m.fidelity),
            opt(m.negativity),
            opt(m.nongaussianity),
            opt(m.w_min),
            opt(reid(m, (1, 1))),
            opt(reid(m, (2, 2))),
            opt(m.fisher),
            num(r.leakage),
            flag(r.leakage_warning()),
        );
    }
    out
}

pub const THERMAL_HEADER: &str = "nbar,F,R_r,W_min,N,E_f,E_r11,E_r22,F_cat,W_min_cat,leakage,leakage_warning";

pub fn thermal_csv(records: &[SweepRecord]) -> String {
    let mut out = format!("{THERMAL_HEADER}\n");
    for r in records {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            opt(param(m, "nbar")),
            opt(m.fidelity),
            opt(m.nongaussianity),
            opt(m.w_min),
            opt(m.negativity),
            opt(m.fisher),
            opt(reid(m, (1, 1))),
            opt(reid(m, (2, 2))),
            opt(m.cat_fidelity),
            opt(m.cat_w_min),
            num(r.leakage),
            flag(r.leakage_warning()),
        );
    }
    out
}

pub const CAT_HEADER: &str = "engine,zeta,F_cat,W_min_cat,outcome_density,leakage,leakage_warning";

pub fn cat_csv(maps: &[CatMap]) -> String {
    let mut out = format!("{CAT_HEADER}\n");
    for c in maps {
        let warn = c.leakage > crate::fock::LEAKAGE_WARN;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.engine.name(),
            num(c.zeta),
            num(c.cat.fidelity),
            num(c.cat.w_min),
            num(c.cat.density),
            num(c.leakage),
            flag(warn),
        );
    }
    out
}

pub const WIGNER_HEADER: &str = "engine,zeta,x,p,W";

pub fn wigner_csv(maps: &[CatMap]) -> String {
    let mut out = format!("{WIGNER_HEADER}\n");
    for c in maps {
        let n = c.map.axis.len();
        for (k, w) in c.map.values.iter().enumerate() {
            let (x, p) = (c.map.axis[k / n], c.map.axis[k % n]);
            let _ = writeln!(out, "{},{},{},{},{}", c.engine.name(), num(c.zeta), num(x), num(p), num(*w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
