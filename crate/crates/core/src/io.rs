//! Text formats shared by the library and the CLI.

use std::fmt::Write as _;

use crate::continuation::Branch;

/// 17 significant digits, `.` separator, scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn spectrum_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::from("k,lambda_discrete,lambda_continuum\n");
    for &(k, d, c) in rows {
        writeln!(out, "{k},{},{}", fmt_num(d), fmt_num(c)).unwrap();
    }
    out
}

pub fn fucik_csv(points: &[crate::half_eigen::FucikPoint]) -> String {
    let mut out = String::from("lambda_plus,lambda_minus,n_plus,n_minus\n");
    for pt in points {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_num(pt.lambda_plus),
            fmt_num(pt.lambda_minus),
            pt.n_plus,
            pt.n_minus
        )
        .unwrap();
    }
    out
}

pub fn branch_csv(branch: &Branch) -> String {
    let mut out = String::from("s,lambda,alpha,l2,h12,in_cone\n");
    for pt in &branch.points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(pt.s),
            fmt_num(pt.lambda),
            fmt_num(pt.alpha),
            fmt_num(pt.l2),
            fmt_num(pt.h12_original),
            pt.in_cone
        )
        .unwrap();
    }
    out
}

/// Gnuplot script drawing lambda against solution norm, one curve per
/// branch CSV, labelled by `k`.
pub fn gnuplot_script(entries: &[(String, usize, usize)], norm_label: &str) -> String {
    let mut out = String::new();
    writeln!(out, "set datafile separator ','").unwrap();
    writeln!(out, "set xlabel 'lambda'").unwrap();
    writeln!(out, "set ylabel '{norm_label}'").unwrap();
    writeln!(out, "set key outside right").unwrap();
    writeln!(out, "set grid").unwrap();
    let curves: Vec<String> = entries
        .iter()
        .map(|(file, k, which)| {
            format!("'{file}' using 2:5 skip 1 with linespoints pt 7 ps 0.4 title 'k={k}, branch {which}'")
        })
        .collect();
    if curves.is_empty() {
        writeln!(out, "# no branches").unwrap();
    } else {
        writeln!(out, "plot {}", curves.join(", \\\n     ")).unwrap();
    }
    out
}
