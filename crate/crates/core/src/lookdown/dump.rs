use std::io::Write;

use crate::error::{Error, Result};
use crate::treespace::DistanceMatrix;
use crate::xi::EventRecord;

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn with_header<W: Write>(mut out: W, header: &[String]) -> Result<csv::Writer<W>> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    Ok(csv::Writer::from_writer(out))
}

/// One row per event: time, restricted partition, semi-partition.
pub fn write_events_csv<W: Write>(out: W, header: &[String], events: &[EventRecord]) -> Result<()> {
    let mut w = with_header(out, header)?;
    w.write_record(["time", "partition", "semipartition"]).map_err(csv_err)?;
    for e in events {
        w.write_record([
            format!("{:?}", e.time),
            e.partition.to_string(),
            e.semipartition.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (time, i < j) entry of each snapshot; levels are 1-based.
pub fn write_snapshots_csv<W: Write>(
    out: W,
    header: &[String],
    snapshots: &[(f64, DistanceMatrix<f64>)],
) -> Result<()> {
    let mut w = with_header(out, header)?;
    w.write_record(["time", "i", "j", "rho"]).map_err(csv_err)?;
    for (t, m) in snapshots {
        for i in 0..m.n() {
            for j in i + 1..m.n() {
                w.write_record([
                    format!("{t:?}"),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    format!("{:?}", m.get(i, j)),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{Partition, SemiPartition};

    #[test]
    fn event_rows() {
        let e = EventRecord {
            time: 0.5,
            partition: Partition::from_blocks(3, &[vec![0, 2], vec![1]]).unwrap(),
            semipartition: SemiPartition::new(3, vec![vec![0, 2]]).unwrap(),
        };
        let mut buf = Vec::new();
        write_events_csv(&mut buf, &["xitree test".into()], &[e]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# xitree test\ntime,partition,semipartition\n0.5,\"{{1,3},{2}}\",\"{{1,3}}\"\n"
        );
    }

    #[test]
    fn snapshot_rows() {
        let m = DistanceMatrix::from_upper(2, |_, _| 3.0);
        let mut buf = Vec::new();
        write_snapshots_csv(&mut buf, &[], &[(1.0, m)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time,i,j,rho\n1.0,1,2,3.0\n");
    }
}
