use mflq_core::io::matrix_to_rows;
use mflq_core::{FeedbackPolicy, Matrix, PFormSolution, RiccatiSolution};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Six significant digits, fixed notation for moderate magnitudes.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub(crate) fn header(command: &str, digest: Option<&str>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m.insert("input_sha256".into(), digest.map_or(Value::Null, |d| json!(d)));
    m
}

pub(crate) fn seq(v: &[Matrix]) -> Value {
    Value::Array(v.iter().map(|m| json!(matrix_to_rows(m))).collect())
}

pub(crate) fn riccati(sol: &RiccatiSolution) -> Value {
    json!({
        "Sx": seq(&sol.sx),
        "Tx": seq(&sol.tx),
        "Sxy": seq(&sol.sxy),
        "Txy": seq(&sol.txy),
        "Sy": seq(&sol.sy),
        "Ty": seq(&sol.ty),
        "W1": seq(&sol.w1),
        "W2": seq(&sol.w2),
        "H1": seq(&sol.h1),
        "H2": seq(&sol.h2),
        "H3": seq(&sol.h3),
        "H4": seq(&sol.h4),
    })
}

pub(crate) fn p_form(p: &PFormSolution) -> Value {
    json!({
        "Px": seq(&p.px),
        "Px_bar": seq(&p.px_bar),
        "Pxy": seq(&p.pxy),
        "Pxy_bar": seq(&p.pxy_bar),
        "Py": seq(&p.py),
        "Py_bar": seq(&p.py_bar),
        "Lxo": seq(&p.lxo),
        "Lxo_bar": seq(&p.lxo_bar),
        "Lyo": seq(&p.lyo),
        "Lyo_bar": seq(&p.lyo_bar),
    })
}

pub(crate) fn gains(policy: &FeedbackPolicy) -> Value {
    Value::Array(
        policy
            .gains
            .iter()
            .enumerate()
            .map(|(k, g)| {
                json!({
                    "k": k,
                    "Kx": matrix_to_rows(&g.kx),
                    "Kx_bar": matrix_to_rows(&g.kx_bar),
                    "Ky": matrix_to_rows(&g.ky),
                    "Ky_bar": matrix_to_rows(&g.ky_bar),
                })
            })
            .collect(),
    )
}

/// Rows of a matrix at 6 significant digits, aligned.
pub(crate) fn matrix_lines(m: &Matrix, indent: &str) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        out.push_str(indent);
        let cells: Vec<String> = (0..m.ncols()).map(|j| format!("{:>12}", fmt6(m[(i, j)]))).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::fmt6;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt6(0.013303222), "0.0133032");
        assert_eq!(fmt6(1.0), "1");
        assert_eq!(fmt6(-0.0530061), "-0.0530061");
        assert_eq!(fmt6(123456.7), "123457");
        assert_eq!(fmt6(1234567.0), "1.23457e6");
        assert_eq!(fmt6(12.5), "12.5");
        assert_eq!(fmt6(0.0), "0");
    }
}
