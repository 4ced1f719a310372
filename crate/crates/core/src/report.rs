//! Machine-readable output: JSON with 17-significant-digit reals, and the
//! psi profile CSV.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::combdim::PsiProfile;
use crate::error::{Error, Result};
use crate::verify::VerificationReport;

/// Pretty JSON formatter that renders every f64 as `d.ddddddddddddddddE±x`
/// (17 significant digits), so values round-trip exactly.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub enum Payload<'a> {
    Report(&'a VerificationReport),
    Profile(&'a PsiProfile),
}

pub fn render(payload: &Payload<'_>, format: Format) -> Result<String> {
    match (payload, format) {
        (Payload::Report(r), Format::Json) => to_json(r),
        (Payload::Profile(p), Format::Json) => to_json(p),
        (Payload::Profile(p), Format::Csv) => Ok(p.to_csv()),
        (Payload::Report(_), Format::Csv) => Err(Error::InvalidArgument("reports are written as JSON".into())),
    }
}

/// Renders `payload` and writes it to `dest`.
pub fn write_report(payload: &Payload<'_>, format: Format, dest: &Path) -> Result<()> {
    let text = render(payload, format)?;
    std::fs::write(dest, text).map_err(|e| Error::Io(format!("{}: {e}", dest.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combdim::PsiProfile;

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json(&vec![0.1f64, 1.0, -2.5e-300]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0, -2.5e-300]);
    }

    #[test]
    fn profile_outputs() {
        let p = PsiProfile { n_values: vec![1, 2], psi_values: vec![1, 2], exact_flags: vec![true, true] };
        assert_eq!(render(&Payload::Profile(&p), Format::Csv).unwrap(), "n,psi,exact\n1,1,true\n2,2,true\n");
        let j = render(&Payload::Profile(&p), Format::Json).unwrap();
        assert_eq!(serde_json::from_str::<PsiProfile>(&j).unwrap(), p);
    }

    #[test]
    fn unwritable_destination() {
        let p = PsiProfile { n_values: vec![1], psi_values: vec![1], exact_flags: vec![true] };
        let e = write_report(&Payload::Profile(&p), Format::Csv, Path::new("/nonexistent/dir/x.csv")).unwrap_err();
        assert!(matches!(e, Error::Io(_)));
    }
}
