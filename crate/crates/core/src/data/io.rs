//! Tab-separated interactions files.
//!
//! ```text
//! user_id<TAB>track_id<TAB>user_country<TAB>track_country<TAB>count
//! ```
//!
//! Country columns hold two-letter codes or are empty. `OTHER` is written as
//! an empty column.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{
    apply_filters, CountryLabel, DataError, DatasetBuilder, FilterOptions, InteractionDataset,
    Provenance,
};

pub const INTERACTIONS_HEADER: &str = "user_id\ttrack_id\tuser_country\ttrack_country\tcount";

/// Reads and filters an interactions file.
pub fn ingest(path: &Path, opts: &FilterOptions) -> Result<InteractionDataset, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path.display().to_string(), e))?;
    parse_interactions(BufReader::new(file), opts)
}

pub fn parse_interactions<R: BufRead>(
    reader: R,
    opts: &FilterOptions,
) -> Result<InteractionDataset, DataError> {
    let mut builder = DatasetBuilder::new();
    let mut lines = reader.lines().enumerate();

    match lines.next() {
        Some((_, Ok(h))) if h.trim_end_matches('\r') == INTERACTIONS_HEADER => {}
        Some((_, Ok(h))) => {
            return Err(DataError::Parse {
                line: 1,
                message: format!("unexpected header {h:?}"),
            })
        }
        Some((_, Err(e))) => return Err(DataError::io("<interactions>", e)),
        None => return Err(DataError::EmptyAfterFiltering),
    }

    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| DataError::io("<interactions>", e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let err = |message: String| DataError::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [user, track, user_country, track_country, count] = fields[..] else {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        };
        if user.is_empty() || track.is_empty() {
            return Err(err("empty user or track id".into()));
        }
        let count: u32 = count
            .parse()
            .map_err(|_| err(format!("invalid count {count:?}")))?;
        if count == 0 {
            return Err(err("count must be at least 1".into()));
        }
        let user_country = parse_country(user_country).map_err(|e| err(e.to_string()))?;
        let track_country = parse_country(track_country).map_err(|e| err(e.to_string()))?;
        if opts.drop_unknown_country && (user_country.is_none() || track_country.is_none()) {
            continue;
        }
        builder
            .add_user(user, user_country.unwrap_or(CountryLabel::Other))
            .map_err(|e| err(e.to_string()))?;
        builder
            .add_track(track, track_country.unwrap_or(CountryLabel::Other))
            .map_err(|e| err(e.to_string()))?;
        builder
            .add_interaction(user, track, count, Provenance::Initial)
            .map_err(|e| err(e.to_string()))?;
    }
    let ds = builder.build()?;
    apply_filters(&ds, opts)
}

fn parse_country(s: &str) -> Result<Option<CountryLabel>, super::InvalidCountry> {
    if s.is_empty() {
        Ok(None)
    } else {
        CountryLabel::code(s).map(Some)
    }
}

/// Writes the dataset in interaction order.
pub fn write_interactions<W: Write>(ds: &InteractionDataset, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{INTERACTIONS_HEADER}")?;
    let column = |c: CountryLabel| if c.is_other() { "" } else { c.as_str() }.to_string();
    for it in ds.interactions() {
        let user = ds.user(it.user);
        let track = ds.track(it.track);
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            user.id,
            track.id,
            column(user.country),
            column(track.country),
            it.count
        )?;
    }
    w.flush()
}
