use std::io;

/// Shortest representation that parses back to the same f64.
pub fn float(v: f64) -> String {
    format!("{v:?}")
}

/// CSV with a header row and LF line endings.
pub fn csv<I, R>(header: &[String], rows: I) -> io::Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.as_ref().iter().map(|&v| float(v)))?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0, 1e-300, 4.0 / std::f64::consts::PI, -2.5e17, 5e-324] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_layout() {
        let out = csv(&["t".into(), "v".into()], [[0.0, 1.0], [0.5, 2.0]]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t,v\n0.0,1.0\n0.5,2.0\n");
    }
}
