//! CSV observation files.
//!
//! One row per observation, `y,x1,...,xd`, label first. The intercept is
//! never stored: it is prepended on load. Labels are `0/1`, or `−1/1` when
//! read with [`LabelCoding::Rademacher`].

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use stochnewton_core::simulate::{recode_rademacher, to_rademacher};
use stochnewton_core::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum LabelCoding {
    #[default]
    #[value(name = "01")]
    ZeroOne,
    Rademacher,
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot open {}: {source}", path.display())]
    Open { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DataError {
    pub fn line(&self) -> Option<u64> {
        match self {
            DataError::Row { line, .. } => Some(*line),
            DataError::Csv(e) => e.position().map(|p| p.line()),
            DataError::Open { .. } => None,
        }
    }
}

/// Streams observations from CSV one row at a time.
///
/// The number of covariates is fixed by the first data row unless given
/// up front with [`ObservationReader::expect_covariates`].
pub struct ObservationReader<R> {
    reader: csv::Reader<R>,
    record: csv::StringRecord,
    labels: LabelCoding,
    covariates: Option<usize>,
    failed: bool,
}

impl<R: io::Read> ObservationReader<R> {
    pub fn new(source: R, has_header: bool, labels: LabelCoding) -> Self {
        let reader = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        Self { reader, record: csv::StringRecord::new(), labels, covariates: None, failed: false }
    }

    pub fn expect_covariates(mut self, d: usize) -> Self {
        self.covariates = Some(d);
        self
    }

    fn parse_record(&mut self) -> Result<Observation, DataError> {
        let line = self.record.position().map_or(0, |p| p.line());
        let err = |message: String| DataError::Row { line, message };
        let fields = self.record.len();
        let d = *self.covariates.get_or_insert(fields.saturating_sub(1));
        if fields != d + 1 {
            return Err(err(format!("expected {} fields, found {fields}", d + 1)));
        }
        let mut values = Vec::with_capacity(fields);
        for (i, field) in self.record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| err(format!("field {} is not a number: {field:?}", i + 1)))?;
            values.push(v);
        }
        let y = match self.labels {
            LabelCoding::ZeroOne if values[0] == 0.0 || values[0] == 1.0 => values[0],
            LabelCoding::ZeroOne => return Err(err(format!("label must be 0 or 1, found {}", values[0]))),
            LabelCoding::Rademacher => recode_rademacher(values[0]).map_err(|e| err(e.to_string()))?,
        };
        Observation::from_covariates(&values[1..], y).map_err(|e| err(e.to_string()))
    }
}

impl<R: io::Read> Iterator for ObservationReader<R> {
    type Item = Result<Observation, DataError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = match self.reader.read_record(&mut self.record) {
            Ok(false) => return None,
            Ok(true) => self.parse_record(),
            Err(e) => Err(e.into()),
        };
        self.failed = item.is_err();
        Some(item)
    }
}

/// Opens `path` for streaming; the error names the path when it cannot be
/// opened.
pub fn stream_from_file(
    path: impl AsRef<Path>,
    has_header: bool,
    labels: LabelCoding,
) -> Result<ObservationReader<File>, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Open { path: path.to_path_buf(), source })?;
    Ok(ObservationReader::new(file, has_header, labels))
}

/// Writes observations in the on-disk row format, with a `y,x1,...` header.
pub struct ObservationWriter<W: Write> {
    writer: csv::Writer<W>,
    labels: LabelCoding,
    covariates: usize,
}

impl<W: Write> ObservationWriter<W> {
    pub fn new(sink: W, covariates: usize, labels: LabelCoding) -> Result<Self, DataError> {
        let mut writer = csv::Writer::from_writer(sink);
        let mut header = vec!["y".to_string()];
        header.extend((1..=covariates).map(|i| format!("x{i}")));
        writer.write_record(&header)?;
        Ok(Self { writer, labels, covariates })
    }

    pub fn write(&mut self, obs: &Observation) -> Result<(), DataError> {
        assert_eq!(obs.covariates().len(), self.covariates, "observation width changed mid-file");
        let y = match self.labels {
            LabelCoding::ZeroOne => obs.y(),
            LabelCoding::Rademacher => to_rademacher(obs.y()),
        };
        self.writer.write_field(y.to_string())?;
        for x in obs.covariates() {
            self.writer.write_field(x.to_string())?;
        }
        self.writer.write_record(None::<&[u8]>)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, DataError> {
        self.writer.flush().map_err(csv::Error::from)?;
        self.writer.into_inner().map_err(|e| DataError::Csv(csv::Error::from(e.into_error())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, header: bool, labels: LabelCoding) -> Vec<Result<Observation, DataError>> {
        ObservationReader::new(text.as_bytes(), header, labels).collect()
    }

    #[test]
    fn parses_rows_and_prepends_intercept() {
        let rows = read("y,x1,x2\n1,0.5,0.25\n0,1,0\n", true, LabelCoding::ZeroOne);
        let obs: Vec<_> = rows.into_iter().map(Result::unwrap).collect();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[0].phi(), &[1.0, 0.5, 0.25]);
        assert_eq!(obs[1].y(), 0.0);
    }

    #[test]
    fn empty_input_is_an_empty_stream() {
        assert!(read("", false, LabelCoding::ZeroOne).is_empty());
        assert!(read("y,x1\n", true, LabelCoding::ZeroOne).is_empty());
    }

    #[test]
    fn arity_error_names_the_line() {
        let rows = read("y,x1\n1,0.5\n0,0.1,0.2\n1,0.3\n", true, LabelCoding::ZeroOne);
        assert_eq!(rows.len(), 2);
        let err = rows[1].as_ref().unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn bad_labels_and_numbers_are_rejected() {
        let err = read("2,0.5\n", false, LabelCoding::ZeroOne).remove(0).unwrap_err();
        assert_eq!(err.line(), Some(1));
        let err = read("1,abc\n", false, LabelCoding::ZeroOne).remove(0).unwrap_err();
        assert!(err.to_string().contains("abc"));
        let err = read("0,0.5\n", false, LabelCoding::Rademacher).remove(0).unwrap_err();
        assert_eq!(err.line(), Some(1));
    }

    #[test]
    fn rademacher_labels_are_recoded() {
        let obs: Vec<_> = read("-1,0.5\n1,0.5\n", false, LabelCoding::Rademacher).into_iter().map(Result::unwrap).collect();
        assert_eq!((obs[0].y(), obs[1].y()), (0.0, 1.0));
    }

    #[test]
    fn writer_round_trips_exactly() {
        let original = vec![
            Observation::from_covariates(&[0.1, 1.0 / 3.0], 1.0).unwrap(),
            Observation::from_covariates(&[f64::MIN_POSITIVE, 0.999_999_999_999_999_9], 0.0).unwrap(),
        ];
        for labels in [LabelCoding::ZeroOne, LabelCoding::Rademacher] {
            let mut w = ObservationWriter::new(Vec::new(), 2, labels).unwrap();
            original.iter().for_each(|o| w.write(o).unwrap());
            let bytes = w.finish().unwrap();
            let back: Vec<_> =
                ObservationReader::new(bytes.as_slice(), true, labels).map(Result::unwrap).collect();
            assert_eq!(back, original);
        }
    }
}
