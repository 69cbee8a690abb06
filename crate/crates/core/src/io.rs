//! File formats: CSV for trajectories and tables, JSON for constants.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which
//! round-trips f64 exactly; the decimal separator is always '.', line
//! endings are always '\n', and map-like metadata is emitted in sorted order,
//! so equal inputs produce byte-identical files.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::calculus::SewingProbe;
use crate::controlled::ControlledNormBreakdown;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rough_path::RoughPath;
use crate::solver::{SolutionRecord, WindowRecord};
use crate::spectral::{weight_table, SpectralField};

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::format(format!("line {line}: cannot parse '{s}' as a number")))
}

fn parse_int(s: &str, line: usize) -> Result<i64> {
    s.trim()
        .parse::<i64>()
        .map_err(|_| Error::format(format!("line {line}: cannot parse '{s}' as an integer")))
}

/// Rough-path file: a comment line with alpha and generator metadata, a
/// `t,x,x2_step` header, then one row per grid point. The second-level entry
/// on a row covers the interval starting at that row, so the final row's
/// `x2_step` field is empty.
pub fn write_rough_path<W: Write>(
    w: &mut W,
    path: &RoughPath,
    meta: &BTreeMap<String, String>,
) -> Result<()> {
    write!(w, "# alpha={}", format_float(path.alpha()))?;
    for (k, v) in meta {
        if k != "alpha" {
            write!(w, " {k}={v}")?;
        }
    }
    writeln!(w)?;
    writeln!(w, "t,x,x2_step")?;
    let n = path.grid().len();
    for i in 0..n {
        let x2 = if i + 1 < n {
            format_float(path.x2_step()[i])
        } else {
            String::new()
        };
        writeln!(
            w,
            "{},{},{}",
            format_float(path.grid().t(i)),
            format_float(path.x()[i]),
            x2
        )?;
    }
    Ok(())
}

pub fn read_rough_path<R: BufRead>(r: R) -> Result<(RoughPath, BTreeMap<String, String>)> {
    let mut meta = BTreeMap::new();
    let mut saw_header = false;
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    let mut x2s = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            for token in rest.split_whitespace() {
                if let Some((k, v)) = token.split_once('=') {
                    meta.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        if !saw_header {
            if trimmed != "t,x,x2_step" {
                return Err(Error::format(format!(
                    "line {lineno}: expected header 't,x,x2_step', got '{trimmed}'"
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::format(format!(
                "line {lineno}: expected 3 fields, got {}",
                fields.len()
            )));
        }
        ts.push(parse_float(fields[0], lineno)?);
        xs.push(parse_float(fields[1], lineno)?);
        if !fields[2].trim().is_empty() {
            x2s.push(parse_float(fields[2], lineno)?);
        }
    }
    if !saw_header {
        return Err(Error::format("missing 't,x,x2_step' header"));
    }
    if x2s.len() + 1 != ts.len() {
        return Err(Error::format(format!(
            "expected {} second-level entries for {} rows, got {}",
            ts.len().saturating_sub(1),
            ts.len(),
            x2s.len()
        )));
    }
    let alpha = match meta.get("alpha") {
        Some(a) => parse_float(a, 0)?,
        None => return Err(Error::format("metadata line must carry alpha=<value>")),
    };
    let grid = TimeGrid::new(ts)?;
    Ok((RoughPath::new(grid, xs, x2s, alpha)?, meta))
}

/// Field file: `dim,cutoff` header pair, then one row per mode with the
/// multi-index and the complex coefficient.
pub fn write_field<W: Write>(w: &mut W, field: &SpectralField) -> Result<()> {
    writeln!(w, "dim,cutoff")?;
    writeln!(w, "{},{}", field.dim(), field.cutoff())?;
    let mut header: Vec<String> = (1..=field.dim()).map(|j| format!("k_{j}")).collect();
    header.push("re".into());
    header.push("im".into());
    writeln!(w, "{}", header.join(","))?;
    for flat in 0..field.len() {
        let k = field.multi_index(flat);
        let c = field.coeffs()[flat];
        let mut row: Vec<String> = k.iter().map(|v| v.to_string()).collect();
        row.push(format_float(c.re));
        row.push(format_float(c.im));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(r: R) -> Result<SpectralField> {
    let mut lines = r.lines().enumerate();
    let mut next_content = |expect: &str| -> Result<(usize, String)> {
        for (idx, line) in lines.by_ref() {
            let line = line?;
            if !line.trim().is_empty() {
                return Ok((idx + 1, line));
            }
        }
        Err(Error::format(format!(
            "unexpected end of file, wanted {expect}"
        )))
    };
    let (lineno, header) = next_content("dim,cutoff header")?;
    if header.trim() != "dim,cutoff" {
        return Err(Error::format(format!(
            "line {lineno}: expected 'dim,cutoff', got '{}'",
            header.trim()
        )));
    }
    let (lineno, shape) = next_content("dim,cutoff values")?;
    let parts: Vec<&str> = shape.trim().split(',').collect();
    if parts.len() != 2 {
        return Err(Error::format(format!(
            "line {lineno}: expected 'dim,cutoff' pair"
        )));
    }
    let dim = parse_int(parts[0], lineno)? as usize;
    let cutoff = parse_int(parts[1], lineno)? as usize;
    let mut field = SpectralField::zero(dim, cutoff)?;
    let (_, _mode_header) = next_content("mode header")?;
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(Error::format(format!(
                "line {lineno}: expected {} fields, got {}",
                dim + 2,
                fields.len()
            )));
        }
        let mut k = Vec::with_capacity(dim);
        for f in &fields[..dim] {
            k.push(parse_int(f, lineno)?);
        }
        let re = parse_float(fields[dim], lineno)?;
        let im = parse_float(fields[dim + 1], lineno)?;
        field.set_coeff(&k, Complex64::new(re, im))?;
        seen += 1;
    }
    if seen != field.len() {
        return Err(Error::format(format!(
            "expected {} mode rows, got {seen}",
            field.len()
        )));
    }
    Ok(field)
}

pub fn write_norm_breakdown<W: Write>(w: &mut W, b: &ControlledNormBreakdown) -> Result<()> {
    writeln!(w, "sup_y,sup_yp,hol_yp,hol_R,hol2_R,total")?;
    writeln!(
        w,
        "{},{},{},{},{},{}",
        format_float(b.sup_y),
        format_float(b.sup_yp),
        format_float(b.hol_yp),
        format_float(b.hol_r),
        format_float(b.hol2_r),
        format_float(b.total)
    )?;
    Ok(())
}

/// Per-time-point solution summary: norms at the solution level and one
/// level down, plus the mild-equation residual.
pub fn write_solution_csv<W: Write>(
    w: &mut W,
    record: &SolutionRecord,
    residuals: &[f64],
) -> Result<()> {
    let path = &record.path;
    if residuals.len() != path.grid().len() {
        return Err(Error::format(format!(
            "expected {} residuals, got {}",
            path.grid().len(),
            residuals.len()
        )));
    }
    let w_ga = weight_table(path.dim(), path.cutoff(), path.gamma() - path.alpha())?;
    writeln!(w, "t,norm_gamma,norm_gamma_minus_alpha,residual")?;
    for i in 0..path.grid().len() {
        writeln!(
            w,
            "{},{},{},{}",
            format_float(path.grid().t(i)),
            format_float(record.sup_history[i]),
            format_float(path.y()[i].norm_with_weights(&w_ga)),
            format_float(residuals[i])
        )?;
    }
    Ok(())
}

pub fn write_windows_csv<W: Write>(w: &mut W, windows: &[WindowRecord]) -> Result<()> {
    writeln!(w, "start,end,iters,contraction,controlled_norm")?;
    for win in windows {
        writeln!(
            w,
            "{},{},{},{},{}",
            format_float(win.start),
            format_float(win.end),
            win.iterations,
            format_float(win.contraction),
            format_float(win.controlled_norm)
        )?;
    }
    Ok(())
}

pub fn write_constants_json<W: Write>(
    w: &mut W,
    constants: &crate::solver::ConstantsLedger,
) -> Result<()> {
    let s = serde_json::to_string_pretty(constants)
        .map_err(|e| Error::format(format!("constants serialization failed: {e}")))?;
    writeln!(w, "{s}")?;
    Ok(())
}

/// Sewing-rate table: one block per measured level gain, one row per probe
/// window, with the block's fitted rate repeated on each row.
pub fn write_rates_csv<W: Write>(w: &mut W, blocks: &[(f64, SewingProbe)]) -> Result<()> {
    writeln!(w, "window,beta,error,fitted_rate")?;
    for (beta, probe) in blocks {
        for (len, err) in &probe.windows {
            writeln!(
                w,
                "{},{},{},{}",
                format_float(*len),
                format_float(*beta),
                format_float(*err),
                format_float(probe.fitted_rate)
            )?;
        }
    }
    Ok(())
}

pub fn write_amplitude_csv<W: Write>(w: &mut W, rows: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "lambda,norm_out")?;
    for (lambda, norm_out) in rows {
        writeln!(w, "{},{}", format_float(*lambda), format_float(*norm_out))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::fbm_lift;

    #[test]
    fn float_format_round_trips_exactly() {
        for &x in &[
            0.0,
            1.0,
            -1.5,
            std::f64::consts::PI,
            1e-300,
            -2.2250738585072014e-308,
            6.02e23,
            0.1 + 0.2,
        ] {
            let s = format_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s} -> {back}");
        }
    }

    #[test]
    fn rough_path_file_round_trips() {
        let lift = fbm_lift(0.4, 64, 1.0, 99, None).unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("generator".to_string(), lift.generator.to_string());
        meta.insert("seed".to_string(), "99".to_string());
        let mut buf = Vec::new();
        write_rough_path(&mut buf, &lift.path, &meta).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# alpha="));
        assert!(text.contains("generator=fgn-circulant-v1"));
        assert!(!text.contains('\r'));

        let (back, meta_back) = read_rough_path(&buf[..]).unwrap();
        assert_eq!(back.x(), lift.path.x());
        assert_eq!(back.x2_step(), lift.path.x2_step());
        assert_eq!(back.alpha(), lift.path.alpha());
        assert_eq!(meta_back.get("seed").unwrap(), "99");

        // Writing again reproduces the same bytes.
        let mut buf2 = Vec::new();
        write_rough_path(&mut buf2, &back, &meta_back).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn rough_path_reader_rejects_malformed_input() {
        assert!(read_rough_path(&b"t,x,x2_step\n0,0,\n"[..]).is_err()); // no alpha
        assert!(read_rough_path(&b"# alpha=4e-1\n0,0,\n"[..]).is_err()); // no header
        let bad = b"# alpha=4e-1\nt,x,x2_step\n0,0,1\n1,1,1\n";
        assert!(read_rough_path(&bad[..]).is_err()); // last row must be open
    }

    #[test]
    fn field_file_round_trips() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(4);
        let f = SpectralField::random(2, 3, 0.5, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dim,cutoff\n2,3\nk_1,k_2,re,im\n"));
        let back = read_field(&buf[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rates_and_amplitude_tables_have_expected_shape() {
        let probe = SewingProbe {
            windows: vec![(1.0, 0.5), (0.5, 0.2)],
            fitted_rate: 1.3,
            error_full: 0.5,
        };
        let mut buf = Vec::new();
        write_rates_csv(&mut buf, &[(0.0, probe)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "window,beta,error,fitted_rate");
        assert_eq!(lines.len(), 3);

        let mut buf = Vec::new();
        write_amplitude_csv(&mut buf, &[(1.0, 2.0), (2.0, 4.0)]).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("lambda,norm_out\n"));
    }
}
