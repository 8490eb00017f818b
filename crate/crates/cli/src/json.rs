//! JSON output with every float written to 17 significant digits.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

/// Scientific notation with 16 fractional digits: enough for an exact
/// round trip of any finite `f64`. Non-finite values never reach here;
/// serde_json writes them as `null`.
fn write_full_precision<W: ?Sized + Write>(writer: &mut W, value: f64) -> io::Result<()> {
    write!(writer, "{value:.16e}")
}

pub struct Exact<F>(F);

impl<F: Formatter> Formatter for Exact<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write_full_precision(writer, value)
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write_full_precision(writer, value as f64)
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
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn write_with<W: Write, F: Formatter, T: Serialize>(out: W, formatter: F, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(out, Exact(formatter));
    value.serialize(&mut ser).map_err(io::Error::other)
}

pub fn to_string_pretty<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    write_with(&mut buf, PrettyFormatter::new(), value).expect("serialising to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn to_line<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    write_with(&mut buf, CompactFormatter, value).expect("serialising to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
