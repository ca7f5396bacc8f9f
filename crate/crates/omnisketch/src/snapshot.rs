//! Versioned binary snapshots.
//!
//! All integers are little-endian and fixed-width; floats are stored as
//! their IEEE-754 bit patterns.
//!
//! ```text
//! magic        8 bytes   "OMNISKT\0"
//! version      u32       1
//! params       f64 epsilon, f64 delta, u64 memory_bits, u32 grid_count,
//!              u32 width, u32 depth, u64 sample_size, u32 fingerprint_bits,
//!              f64 epsilon1, f64 epsilon2, f64 delta1, f64 delta2, u64 seed
//! schema       u8 has_seed, u64 seed, u32 attribute_count, then per attribute:
//!              str name, u8 kind (0 categorical, 1 numeric),
//!              u32 domain_bits (0 when unset), u8 range,
//!              u32 dictionary_len, str value...
//! stream_len   u64
//! cell_count   u64, then per cell: u64 count, u32 sample_len, u64 fingerprint...
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8 bytes. Cells appear in the
//! order of `OmniSketch::cells`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use omnisketch_core::{Cell, OmniSketch, SketchParams};

use crate::error::{Error, Result};
use crate::schema::{AttributeConfig, AttributeKind, Dictionaries, SchemaConfig};

pub const MAGIC: [u8; 8] = *b"OMNISKT\0";
pub const VERSION: u32 = 1;

/// A sketch together with the schema and dictionaries needed to query it.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub sketch: OmniSketch,
    pub schema: SchemaConfig,
    pub dictionaries: Dictionaries,
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_u32::<LE>(s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LE>()? as usize;
    let mut buf = vec![0u8; len.min(1 << 20)];
    if len > buf.len() {
        return Err(Error::Snapshot("string length out of range".into()));
    }
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Snapshot("string is not UTF-8".into()))
}

fn usize_field(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Snapshot(format!("{what} does not fit this platform")))
}

impl Snapshot {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let p = self.sketch.params();
        w.write_all(&MAGIC)?;
        w.write_u32::<LE>(VERSION)?;

        w.write_f64::<LE>(p.epsilon)?;
        w.write_f64::<LE>(p.delta)?;
        w.write_u64::<LE>(p.memory_bits)?;
        w.write_u32::<LE>(p.grid_count as u32)?;
        w.write_u32::<LE>(p.width as u32)?;
        w.write_u32::<LE>(p.depth as u32)?;
        w.write_u64::<LE>(p.sample_size as u64)?;
        w.write_u32::<LE>(p.fingerprint_bits)?;
        w.write_f64::<LE>(p.epsilon1)?;
        w.write_f64::<LE>(p.epsilon2)?;
        w.write_f64::<LE>(p.delta1)?;
        w.write_f64::<LE>(p.delta2)?;
        w.write_u64::<LE>(p.seed)?;

        w.write_u8(self.schema.seed.is_some() as u8)?;
        w.write_u64::<LE>(self.schema.seed.unwrap_or(0))?;
        w.write_u32::<LE>(self.schema.attributes.len() as u32)?;
        for (i, a) in self.schema.attributes.iter().enumerate() {
            write_str(&mut w, &a.name)?;
            w.write_u8(match a.kind {
                AttributeKind::Categorical => 0,
                AttributeKind::Numeric => 1,
            })?;
            w.write_u32::<LE>(a.domain_bits.unwrap_or(0))?;
            w.write_u8(a.range as u8)?;
            let values = self.dictionaries.values(i);
            w.write_u32::<LE>(values.len() as u32)?;
            for v in values {
                write_str(&mut w, v)?;
            }
        }

        w.write_u64::<LE>(self.sketch.len())?;
        let cells = self.sketch.cells();
        w.write_u64::<LE>(cells.len() as u64)?;
        for c in cells {
            w.write_u64::<LE>(c.count())?;
            w.write_u32::<LE>(c.len() as u32)?;
            for fp in c.iter() {
                w.write_u64::<LE>(fp)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::Snapshot("not a snapshot file".into()));
        }
        let version = r.read_u32::<LE>()?;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }

        let params = SketchParams {
            epsilon: r.read_f64::<LE>()?,
            delta: r.read_f64::<LE>()?,
            memory_bits: r.read_u64::<LE>()?,
            grid_count: r.read_u32::<LE>()? as usize,
            width: r.read_u32::<LE>()? as usize,
            depth: r.read_u32::<LE>()? as usize,
            sample_size: usize_field(r.read_u64::<LE>()?, "sample size")?,
            fingerprint_bits: r.read_u32::<LE>()?,
            epsilon1: r.read_f64::<LE>()?,
            epsilon2: r.read_f64::<LE>()?,
            delta1: r.read_f64::<LE>()?,
            delta2: r.read_f64::<LE>()?,
            seed: r.read_u64::<LE>()?,
        };

        let has_seed = r.read_u8()? != 0;
        let seed = r.read_u64::<LE>()?;
        let count = r.read_u32::<LE>()? as usize;
        let mut attributes = Vec::with_capacity(count.min(1024));
        let mut dict_values = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name = read_str(&mut r)?;
            let kind = match r.read_u8()? {
                0 => AttributeKind::Categorical,
                1 => AttributeKind::Numeric,
                k => return Err(Error::Snapshot(format!("unknown attribute kind {k}"))),
            };
            let bits = r.read_u32::<LE>()?;
            let range = r.read_u8()? != 0;
            let n = r.read_u32::<LE>()? as usize;
            let values = (0..n)
                .map(|_| read_str(&mut r))
                .collect::<Result<Vec<_>>>()?;
            attributes.push(AttributeConfig {
                name,
                kind,
                domain_bits: (bits != 0).then_some(bits),
                range,
            });
            dict_values.push(values);
        }
        let schema = SchemaConfig {
            seed: has_seed.then_some(seed),
            attributes,
        };
        schema.validate()?;

        let len = r.read_u64::<LE>()?;
        let cell_count = usize_field(r.read_u64::<LE>()?, "cell count")?;
        let expected = schema.sketch_schema().grid_count() * params.depth * params.width;
        if cell_count != expected {
            return Err(Error::Snapshot(format!(
                "{cell_count} cells stored, {expected} expected"
            )));
        }
        let mut cells = Vec::with_capacity(cell_count);
        let mut fps = Vec::new();
        for _ in 0..cell_count {
            let cnt = r.read_u64::<LE>()?;
            let n = r.read_u32::<LE>()? as usize;
            if n > params.sample_size {
                return Err(Error::Snapshot(
                    "cell sample exceeds the sample size".into(),
                ));
            }
            fps.clear();
            for _ in 0..n {
                fps.push(r.read_u64::<LE>()?);
            }
            cells.push(Cell::from_parts(
                cnt,
                fps.iter().copied(),
                params.sample_size,
            )?);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Snapshot("trailing bytes after the last cell".into()));
        }

        let sketch = OmniSketch::from_parts(params, schema.sketch_schema(), cells, len)?;
        Ok(Snapshot {
            sketch,
            schema,
            dictionaries: Dictionaries::from_values(dict_values),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?)).map_err(|e| match e {
            Error::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
                Error::Snapshot("file is truncated".into())
            }
            e => e,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use omnisketch_core::{Predicate, Query, Record, RecordId};

    fn sample() -> Snapshot {
        let schema = SchemaConfig::from_toml(
            "seed = 9\n[[attribute]]\nname = \"h\"\nkind = \"categorical\"\n\n[[attribute]]\nname = \"n\"\nkind = \"numeric\"\ndomain_bits = 5\nrange = true\n",
        )
        .unwrap();
        let core = schema.sketch_schema();
        let params = SketchParams::with_sample_size(0.1, 0.1, 16, core.grid_count())
            .unwrap()
            .with_seed(77);
        let mut sketch = OmniSketch::new(params, core).unwrap();
        let mut dictionaries = Dictionaries::new(2);
        for i in 0..500u64 {
            let h = dictionaries.encode(0, ["x", "y", "z"][(i % 3) as usize]);
            sketch
                .insert(&Record::new(RecordId(i), vec![h, i % 32 + 1]))
                .unwrap();
        }
        Snapshot {
            sketch,
            schema,
            dictionaries,
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let snap = sample();
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let back = Snapshot::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.schema, snap.schema);
        assert_eq!(back.dictionaries, snap.dictionaries);
        assert_eq!(back.sketch.params(), snap.sketch.params());
        assert_eq!(back.sketch.cells(), snap.sketch.cells());
        for h in 1..=3 {
            for lo in 1..=32 {
                let q = Query::new(vec![
                    Predicate::equals(0, h),
                    Predicate::range(1, lo, (lo + 7).min(32)),
                ]);
                let a = snap.sketch.estimate(&q).unwrap();
                let b = back.sketch.estimate(&q).unwrap();
                assert_eq!(a.value.to_bits(), b.value.to_bits());
                assert_eq!(a, b);
            }
        }
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn rejects_damaged_input() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            Snapshot::read_from(bad.as_slice()),
            Err(Error::Snapshot(_))
        ));
        let mut bad = buf.clone();
        bad[8] = 2;
        assert!(matches!(
            Snapshot::read_from(bad.as_slice()),
            Err(Error::Snapshot(_))
        ));
        assert!(Snapshot::read_from(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad.push(0);
        assert!(matches!(
            Snapshot::read_from(bad.as_slice()),
            Err(Error::Snapshot(_))
        ));
    }
}
