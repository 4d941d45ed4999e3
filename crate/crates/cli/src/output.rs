//! CSV and gnuplot output.

use std::io::Write;
use std::path::Path;

use ris_crb::{Band, ModelVariant, Wavefront};

use crate::error::{CliError, Result};
use crate::sweep::{Conditioning, ResultRow, SweepResult};

pub const CSV_HEADER: [&str; 9] = [
    "sweep_value",
    "wavefront",
    "band",
    "conditioning",
    "peb_m",
    "oeb_x_rad",
    "oeb_y_rad",
    "oeb_z_rad",
    "fim_cond",
];

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn wavefront_label(w: Wavefront) -> &'static str {
    match w {
        Wavefront::NearField => "nf",
        Wavefront::FarField => "ff",
    }
}

fn band_label(b: Band) -> &'static str {
    match b {
        Band::Wideband => "wb",
        Band::Narrowband => "nb",
    }
}

/// Writes the rows as CSV to any writer.
pub fn write_csv<W: Write>(result: &SweepResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in &result.rows {
        w.write_record([
            format!("{:e}", r.sweep_value),
            wavefront_label(r.variant.wavefront).to_string(),
            band_label(r.variant.band).to_string(),
            r.conditioning.label().to_string(),
            num(r.peb),
            num(r.oeb[0]),
            num(r.oeb[1]),
            num(r.oeb[2]),
            num(r.fim_cond),
        ])?;
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(result, std::io::BufWriter::new(file)).map_err(|e| match e {
        CliError::Io { source, .. } => CliError::io(path, source),
        other => other,
    })
}

/// Reads a CSV written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let bad = |msg: String| CliError::Parse {
        path: path.display().to_string(),
        message: msg,
    };
    let headers = reader.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let opt = |i: usize| -> Result<Option<f64>> {
            let t = &rec[i];
            if t.is_empty() {
                return Ok(None);
            }
            t.parse().map(Some).map_err(|_| bad(format!("column {}: bad number {t:?}", CSV_HEADER[i])))
        };
        let wavefront = match &rec[1] {
            "nf" => Wavefront::NearField,
            "ff" => Wavefront::FarField,
            w => return Err(bad(format!("unknown wavefront {w:?}"))),
        };
        let band = match &rec[2] {
            "wb" => Band::Wideband,
            "nb" => Band::Narrowband,
            b => return Err(bad(format!("unknown band {b:?}"))),
        };
        let conditioning =
            Conditioning::from_label(&rec[3]).ok_or_else(|| bad(format!("unknown conditioning {:?}", &rec[3])))?;
        rows.push(ResultRow {
            sweep_value: opt(0)?.ok_or_else(|| bad("missing sweep_value".into()))?,
            variant: ModelVariant::new(wavefront, band),
            conditioning,
            peb: opt(4)?,
            oeb: [opt(5)?, opt(6)?, opt(7)?],
            fim_cond: opt(8)?,
        });
    }
    Ok(rows)
}

/// What the sweep value column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Bandwidth,
    Side,
}

/// Gnuplot script plotting `csv_path` (referenced by file name, so the
/// script must sit next to the CSV). PEB rows go to the first panel and
/// OEB_y rows to the second.
pub fn plot_script(result: &SweepResult, csv_name: &str, axis: SweepAxis) -> String {
    let (xlabel, xscale) = match axis {
        SweepAxis::Bandwidth => ("B [GHz]", "1e-9"),
        SweepAxis::Side => ("RIS side [cm]", "1e2"),
    };
    let mut series: Vec<(ModelVariant, Conditioning)> = Vec::new();
    for r in &result.rows {
        if !series.contains(&(r.variant, r.conditioning)) {
            series.push((r.variant, r.conditioning));
        }
    }
    let plot = |column: usize, keep: &dyn Fn(Conditioning) -> bool| -> String {
        let lines: Vec<String> = series
            .iter()
            .filter(|(_, c)| keep(*c))
            .map(|(v, c)| {
                format!(
                    "'{csv_name}' using ((strcol(2) eq '{w}' && strcol(3) eq '{b}' && strcol(4) eq '{c}') ? $1*{xscale} : 1/0):{column} with linespoints title '{v} {c}'",
                    w = wavefront_label(v.wavefront),
                    b = band_label(v.band),
                )
            })
            .collect();
        if lines.is_empty() {
            "set label 1 'no rows' at graph 0.5, 0.5\nplot 1/0 notitle\nunset label 1\n".to_string()
        } else {
            format!("plot {}\n", lines.join(", \\\n     "))
        }
    };
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 1200,500\n");
    s.push_str(&format!("set output '{}.png'\n", csv_name.trim_end_matches(".csv")));
    s.push_str("set multiplot layout 1,2\n");
    s.push_str("set logscale y\nset grid\n");
    s.push_str(&format!("set xlabel '{xlabel}'\n"));
    s.push_str("set ylabel 'PEB [m]'\n");
    s.push_str(&plot(5, &|c| c != Conditioning::KnownPosition));
    s.push_str("set ylabel 'OEB psi_y [rad]'\n");
    s.push_str(&plot(7, &|c| c != Conditioning::KnownOrientation));
    s.push_str("unset multiplot\n");
    s
}

pub fn emit_plot_script(result: &SweepResult, csv_path: &Path, script_path: &Path, axis: SweepAxis) -> Result<()> {
    let name = csv_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| csv_path.display().to_string());
    std::fs::write(script_path, plot_script(result, &name, axis)).map_err(|e| CliError::io(script_path, e))
}

/// `results.csv` at 4 GHz becomes `results_b4ghz.csv`.
pub fn per_bandwidth_path(path: &Path, bandwidth: f64) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    let ghz = bandwidth / 1e9;
    let tag = if ghz.fract() == 0.0 {
        format!("{ghz:.0}")
    } else {
        format!("{ghz}").replace('.', "p")
    };
    path.with_file_name(format!("{stem}_b{tag}ghz.{ext}"))
}
