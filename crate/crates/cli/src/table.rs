//! CSV tables with fixed formatting and optional gnuplot scripts.

use std::io::Write;

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Empty,
}

impl Cell {
    /// Reals carry 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.to_string(),
            Cell::Real(x) if x.is_nan() => "nan".to_string(),
            Cell::Real(x) => format!("{x:.16e}"),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<String>) -> Self {
        Table {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, out: impl Write) -> Result<(), CliError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        writer.write_record(&self.headers)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Cell::render))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }
}

/// Log-log plot of column `y` against column `x` (1-based) of a CSV file.
pub fn gnuplot_script(csv_name: &str, title: &str, x: (usize, &str), y: (usize, &str)) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale xy\n\
         set title '{title}'\n\
         set xlabel '{}'\n\
         set ylabel '{}'\n\
         set terminal pngcairo size 800,600\n\
         set output '{}.png'\n\
         plot '{csv_name}' using {}:(abs(${})) with linespoints\n",
        x.1,
        y.1,
        csv_name.trim_end_matches(".csv"),
        x.0,
        y.0
    )
}
