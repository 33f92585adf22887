//! Result rows and their CSV form.
//!
//! The table is plain UTF-8 with LF line endings. Floats carry at most ten
//! significant digits; fields that do not apply to a method are empty.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gcn::Activation;

/// Column order of the results table.
pub const RESULT_HEADER: [&str; 11] = [
    "experiment",
    "method",
    "n",
    "m",
    "angle_diff_rad",
    "hidden",
    "lr",
    "activation",
    "replicate",
    "seed",
    "test_error",
];

/// Significant digits kept when rendering floats.
pub const SIGNIFICANT_DIGITS: usize = 10;

/// One (grid point, method, replicate) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub angle_diff_rad: Option<f64>,
    pub hidden: Option<usize>,
    pub lr: Option<f64>,
    pub activation: Option<Activation>,
    pub replicate: usize,
    pub seed: u64,
    pub test_error: f64,
}

impl ResultRecord {
    fn to_fields(&self) -> [String; 11] {
        [
            self.experiment.clone(),
            self.method.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.angle_diff_rad.map(format_float).unwrap_or_default(),
            self.hidden.map(|h| h.to_string()).unwrap_or_default(),
            self.lr.map(format_float).unwrap_or_default(),
            self.activation.map(|a| a.as_str().to_string()).unwrap_or_default(),
            self.replicate.to_string(),
            self.seed.to_string(),
            format_float(self.test_error),
        ]
    }

    fn from_fields(record: &csv::StringRecord, line: u64) -> Result<Self> {
        if record.len() != RESULT_HEADER.len() {
            return Err(Error::Parameter(format!(
                "line {line}: expected {} fields, found {}",
                RESULT_HEADER.len(),
                record.len()
            )));
        }
        let field = |k: usize| &record[k];
        let parse = |k: usize| -> Result<String> {
            if field(k).is_empty() {
                return Err(Error::Parameter(format!("line {line}: empty {}", RESULT_HEADER[k])));
            }
            Ok(field(k).to_string())
        };
        let optional = |k: usize| -> Option<&str> { Some(field(k)).filter(|s| !s.is_empty()) };
        Ok(Self {
            experiment: parse(0)?,
            method: parse(1)?,
            n: parse_value(field(2), RESULT_HEADER[2], line)?,
            m: parse_value(field(3), RESULT_HEADER[3], line)?,
            angle_diff_rad: optional(4)
                .map(|s| parse_value(s, RESULT_HEADER[4], line))
                .transpose()?,
            hidden: optional(5)
                .map(|s| parse_value(s, RESULT_HEADER[5], line))
                .transpose()?,
            lr: optional(6)
                .map(|s| parse_value(s, RESULT_HEADER[6], line))
                .transpose()?,
            activation: optional(7)
                .map(|s| parse_value(s, RESULT_HEADER[7], line))
                .transpose()?,
            replicate: parse_value(field(8), RESULT_HEADER[8], line)?,
            seed: parse_value(field(9), RESULT_HEADER[9], line)?,
            test_error: parse_value(field(10), RESULT_HEADER[10], line)?,
        })
    }
}

fn parse_value<T: FromStr>(text: &str, column: &str, line: u64) -> Result<T> {
    text.parse()
        .map_err(|_| Error::Parameter(format!("line {line}: cannot parse {column} from '{text}'")))
}

/// Shortest decimal form of `x` rounded to [`SIGNIFICANT_DIGITS`] digits.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let mut rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("scientific rendering parses back");
    if rounded.is_infinite() {
        // rounding up overflowed past f64::MAX; truncate instead
        rounded = x.signum() * 1.797_693_134e308;
    }
    let plain = rounded.to_string();
    let exponent = rounded.abs().log10().floor();
    if (-5.0..=15.0).contains(&exponent) {
        plain
    } else {
        format!("{rounded:e}")
    }
}

/// Renders records (header first) as CSV text.
pub fn to_csv_string(records: &[ResultRecord]) -> Result<String> {
    let mut writer = csv_writer(Vec::new());
    writer.write_record(RESULT_HEADER)?;
    for record in records {
        writer.write_record(record.to_fields())?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Numerical(format!("flushing in-memory CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

/// Parses CSV text produced by [`to_csv_string`].
pub fn from_csv_str(text: &str) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(RESULT_HEADER) {
        return Err(Error::Parameter(format!(
            "unexpected header '{}'",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .records()
        .map(|row| {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            ResultRecord::from_fields(&row, line)
        })
        .collect()
}

/// Writes the results table atomically (temporary file, then rename).
pub fn write_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    write_atomic(path, to_csv_string(records)?.as_bytes())
}

/// Reads a results table from disk.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_csv_str(&text)
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    file.write_all(bytes).map_err(|e| Error::io(path, e))?;
    file.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    file.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// CSV writer with LF terminators, used for every table the runner emits.
pub(crate) fn csv_writer<W: std::io::Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .flexible(true)
        .from_writer(sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::*;
    use rand::Rng;

    fn sample_record(k: usize) -> ResultRecord {
        ResultRecord {
            experiment: "exp1".into(),
            method: "gcn-unsup-relu".into(),
            n: 1000,
            m: 100,
            angle_diff_rad: Some(0.098_174_770_424_681),
            hidden: Some(2),
            lr: Some(0.01),
            activation: Some(Activation::Relu),
            replicate: k,
            seed: 42 + k as u64,
            test_error: 0.263_333_333_333_3,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let text = to_csv_string(&[]).unwrap();
        assert_eq!(text, format!("{}\n", RESULT_HEADER.join(",")));
        assert!(from_csv_str(&text).unwrap().is_empty());
    }

    #[test]
    fn one_record_gives_two_lines() {
        let record = sample_record(3);
        let text = to_csv_string(std::slice::from_ref(&record)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains('\r'));
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "exp1,gcn-unsup-relu,1000,100,0.09817477042,2,0.01,relu,3,45,0.2633333333"
        );
        let back = from_csv_str(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].seed, 45);
        assert_eq!(back[0].angle_diff_rad, Some(0.09817477042));
    }

    #[test]
    fn missing_fields_are_empty_strings() {
        let record = ResultRecord {
            method: "ase-2".into(),
            angle_diff_rad: None,
            hidden: None,
            lr: None,
            activation: None,
            ..sample_record(0)
        };
        let text = to_csv_string(std::slice::from_ref(&record)).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "exp1,ase-2,1000,100,,,,,0,42,0.2633333333"
        );
        assert_eq!(from_csv_str(&text).unwrap()[0], record.with_rounded_floats());
    }

    impl ResultRecord {
        fn with_rounded_floats(&self) -> Self {
            let round = |x: f64| format_float(x).parse::<f64>().unwrap();
            Self {
                angle_diff_rad: self.angle_diff_rad.map(round),
                lr: self.lr.map(round),
                test_error: round(self.test_error),
                ..self.clone()
            }
        }
    }

    #[test]
    fn ten_thousand_records_round_trip_field_by_field() {
        let mut rng = stream_rng(7, Stream::Oracle);
        let activations = [None, Some(Activation::Relu), Some(Activation::Identity)];
        let records: Vec<ResultRecord> = (0..10_000)
            .map(|k| ResultRecord {
                experiment: ["exp1", "exp2", "exp3"][k % 3].into(),
                method: ["erm-latent", "ase-1", "gcn-unsup-linear"][k % 3].into(),
                n: rng.random_range(2..5000),
                m: k % 97 + 1,
                angle_diff_rad: (k % 4 != 0).then(|| rng.random::<f64>() * 0.5),
                hidden: (k % 5 != 0).then(|| rng.random_range(1..64)),
                lr: (k % 5 != 0).then(|| 10f64.powf(-rng.random_range(1.0..5.0))),
                activation: activations[k % 3],
                replicate: k,
                seed: rng.random(),
                test_error: rng.random(),
            })
            .collect();
        let text = to_csv_string(&records).unwrap();
        let back = from_csv_str(&text).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            let a = a.with_rounded_floats();
            assert_eq!(a.experiment, b.experiment);
            assert_eq!(a.method, b.method);
            assert_eq!((a.n, a.m, a.replicate, a.seed), (b.n, b.m, b.replicate, b.seed));
            assert_eq!(a.hidden, b.hidden);
            assert_eq!(a.activation, b.activation);
            assert_eq!(a.angle_diff_rad, b.angle_diff_rad);
            assert_eq!(a.lr, b.lr);
            assert_eq!(a.test_error, b.test_error);
        }
        // rendering the parsed rows reproduces the text byte for byte
        assert_eq!(to_csv_string(&back).unwrap(), text);
    }

    #[test]
    fn float_rendering_examples() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(0.25), "0.25");
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(0.001), "0.001");
        assert_eq!(format_float(std::f64::consts::PI / 32.0), "0.09817477042");
        assert_eq!(format_float(1.0 / 3.0), "0.3333333333");
        assert_eq!(format_float(123_456_789_012.0), "123456789000");
        assert_eq!(format_float(1.5e-9), "1.5e-9");
        assert_eq!(format_float(-2.0e20), "-2e20");
    }

    #[test]
    fn bad_rows_are_rejected() {
        let header = RESULT_HEADER.join(",");
        assert!(from_csv_str("a,b\n").is_err());
        assert!(from_csv_str(&format!("{header}\nexp1,ase-1,x,1,,,,,0,0,0.5\n")).is_err());
        assert!(from_csv_str(&format!("{header}\nexp1,ase-1,10,1,,,,,0,0\n")).is_err());
        assert!(from_csv_str(&format!("{header}\nexp1,ase-1,10,1,,,,tanh,0,0,0.5\n")).is_err());
    }

    #[test]
    fn atomic_write_replaces_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        fs::write(&path, "stale").unwrap();
        let records = vec![sample_record(0), sample_record(1)];
        write_csv(&records, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn unwritable_path_reports_it() {
        let err = write_csv(&[], Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }

    #[test]
    fn extreme_floats_stay_finite() {
        for x in [f64::MAX, -f64::MAX, f64::MIN_POSITIVE, 5e-324] {
            let back: f64 = format_float(x).parse().unwrap();
            assert!(back.is_finite());
            assert!((back - x).abs() <= x.abs() * 5e-10, "{x} -> {back}");
        }
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    proptest! {
        #[test]
        fn any_finite_bit_pattern_round_trips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let text = format_float(x);
            let back: f64 = text.parse().unwrap();
            prop_assert!((back - x).abs() <= x.abs() * 5e-10, "{} -> {}", x, text);
            prop_assert_eq!(format_float(back), text);
        }

        #[test]
        fn rendered_floats_keep_ten_digits(x in -1e6f64..1e6) {
            let back: f64 = format_float(x).parse().unwrap();
            let tol = x.abs() * 5e-10 + f64::MIN_POSITIVE;
            prop_assert!((back - x).abs() <= tol, "{x} -> {back}");
            // idempotent once rounded
            prop_assert_eq!(format_float(back), format_float(x));
        }
    }
}
