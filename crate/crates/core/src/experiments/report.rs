use super::{PcaPoint, RunReport};
use std::io::{self, Write};

/// `epoch,accuracy,loss` rows, one per trained epoch.
pub fn write_curves_csv(mut out: impl Write, run: &RunReport) -> io::Result<()> {
    writeln!(out, "epoch,accuracy,loss")?;
    for e in &run.epochs {
        writeln!(out, "{},{},{}", e.epoch, e.test_accuracy, e.train_loss)?;
    }
    out.flush()
}

pub fn write_pca_csv(mut out: impl Write, points: &[PcaPoint]) -> io::Result<()> {
    writeln!(out, "x,y,class")?;
    for p in points {
        writeln!(out, "{},{},{}", p.x, p.y, p.class)?;
    }
    out.flush()
}
