//! In-memory CSV tables with `\n` line endings.

use crate::error::{Error, Result};

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Thin wrapper over an in-memory CSV writer.
pub(crate) struct Table {
    writer: csv::Writer<Vec<u8>>,
    header: Vec<String>,
    started: bool,
}

impl Table {
    pub(crate) fn new(header: &[&str]) -> Self {
        Self {
            writer: csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new()),
            header: header.iter().map(|s| s.to_string()).collect(),
            started: false,
        }
    }

    pub(crate) fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        if !self.started {
            self.writer.write_record(&self.header).map_err(csv_err)?;
            self.started = true;
        }
        self.writer.write_record(fields).map_err(csv_err)
    }

    pub(crate) fn finish(mut self) -> Result<String> {
        if !self.started {
            self.writer.write_record(&self.header).map_err(csv_err)?;
        }
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }
}
