//! Level-product cache file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "RMCLEVEL"
//! format       u32      1
//! p            u64
//! N            u32      working digits; residues live mod p^N
//! tag          u16 length + UTF-8 model tag
//! divisor      u64      DivisorSpec::hash
//! J            u32      highest level stored
//! records      u64
//! record       key[32] level:u32 num.a num.b den.a den.b:u64 valuation:i64 weight:i64
//!              lost:u32 count:u64 zero:u8
//! ```
//!
//! Keys are SHA-256 digests of the level plan description (segment, level, point, options).
//! Residues are stored as canonical integers in [0, p^N).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rmc_core::fastmod::{Zpw, E2};
use rmc_core::rigidprod::{DivisorSpec, LevelPartial, LevelPlan};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MAGIC: &[u8; 8] = b"RMCLEVEL";
pub const FORMAT_VERSION: u32 = 1;
const RECORD_LEN: usize = 32 + 4 + 4 * 8 + 8 + 8 + 4 + 8 + 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheHeader {
    pub format_version: u32,
    pub p: u64,
    pub n: u32,
    pub model: String,
    pub divisor_hash: u64,
    pub j: u32,
}

impl CacheHeader {
    pub fn for_job(spec: &DivisorSpec, n: u32) -> Self {
        CacheHeader {
            format_version: FORMAT_VERSION,
            p: spec.p,
            n,
            model: spec.model.tag().into(),
            divisor_hash: spec.hash(),
            j: 0,
        }
    }

    fn compatible(&self, o: &Self) -> bool {
        (
            self.format_version,
            self.p,
            self.n,
            &self.model,
            self.divisor_hash,
        ) == (o.format_version, o.p, o.n, &o.model, o.divisor_hash)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CachedLevel {
    pub level: u32,
    pub num: [u64; 2],
    pub den: [u64; 2],
    pub valuation: i64,
    pub weight: i64,
    pub lost: u32,
    pub count: u64,
    pub zero: bool,
}

pub struct LevelCache {
    header: CacheHeader,
    z: Zpw,
    entries: Mutex<BTreeMap<[u8; 32], CachedLevel>>,
    hits: AtomicU64,
    misses: AtomicU64,
    /// true when an existing file was discarded because its header did not match
    pub reset: bool,
}

pub fn plan_digest(plan: &LevelPlan) -> [u8; 32] {
    Sha256::digest(plan.cache_key()).into()
}

impl LevelCache {
    pub fn new(header: CacheHeader) -> Result<Self, CliError> {
        let z = Zpw::new(header.p, header.n)?;
        Ok(LevelCache {
            header,
            z,
            entries: Mutex::new(BTreeMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            reset: false,
        })
    }

    /// Loads `path` if it exists and matches `header`; otherwise starts empty.
    pub fn open(path: &Path, header: CacheHeader) -> Result<Self, CliError> {
        let mut out = Self::new(header)?;
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(CliError::io(path, e)),
        };
        let (found, entries) = decode(&bytes, &out.z).map_err(|reason| CliError::Cache {
            path: path.into(),
            reason,
        })?;
        if found.compatible(&out.header) {
            out.header.j = found.j;
            *out.entries.get_mut().unwrap() = entries;
        } else {
            out.reset = true;
        }
        Ok(out)
    }

    pub fn header(&self) -> &CacheHeader {
        &self.header
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn get(&self, plan: &LevelPlan) -> Option<LevelPartial> {
        if !self.serves(plan) {
            return None;
        }
        let hit = self
            .entries
            .lock()
            .unwrap()
            .get(&plan_digest(plan))
            .copied();
        let counter = if hit.is_some() {
            &self.hits
        } else {
            &self.misses
        };
        counter.fetch_add(1, Ordering::Relaxed);
        let c = hit?;
        let z = &self.z;
        Some(LevelPartial {
            num: E2 {
                a: z.to_mont(c.num[0]),
                b: z.to_mont(c.num[1]),
            },
            den: E2 {
                a: z.to_mont(c.den[0]),
                b: z.to_mont(c.den[1]),
            },
            valuation: c.valuation,
            weight: c.weight,
            lost: c.lost,
            count: c.count,
            zero: c.zero,
            lines: Default::default(),
        })
    }

    pub fn insert(&self, plan: &LevelPlan, part: &LevelPartial) {
        if !self.serves(plan) {
            return;
        }
        let z = &self.z;
        let c = CachedLevel {
            level: plan.level,
            num: [z.from_mont(part.num.a), z.from_mont(part.num.b)],
            den: [z.from_mont(part.den.a), z.from_mont(part.den.b)],
            valuation: part.valuation,
            weight: part.weight,
            lost: part.lost,
            count: part.count,
            zero: part.zero,
        };
        self.entries.lock().unwrap().insert(plan_digest(plan), c);
    }

    fn serves(&self, plan: &LevelPlan) -> bool {
        plan.p == self.header.p
            && plan.opts.digits == self.header.n
            && plan.model.tag() == self.header.model
    }

    /// Writes the cache with records in key order.
    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let entries = self.entries.lock().unwrap();
        let mut header = self.header.clone();
        header.j = entries
            .values()
            .map(|c| c.level)
            .max()
            .unwrap_or(0)
            .max(header.j);
        let bytes = encode(&header, &entries);
        let tmp: PathBuf = path.with_extension("tmp");
        std::fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    }
}

pub fn encode(h: &CacheHeader, entries: &BTreeMap<[u8; 32], CachedLevel>) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + entries.len() * RECORD_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&h.format_version.to_le_bytes());
    out.extend_from_slice(&h.p.to_le_bytes());
    out.extend_from_slice(&h.n.to_le_bytes());
    out.extend_from_slice(&(h.model.len() as u16).to_le_bytes());
    out.extend_from_slice(h.model.as_bytes());
    out.extend_from_slice(&h.divisor_hash.to_le_bytes());
    out.extend_from_slice(&h.j.to_le_bytes());
    out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for (k, c) in entries {
        out.extend_from_slice(k);
        out.extend_from_slice(&c.level.to_le_bytes());
        for x in [c.num[0], c.num[1], c.den[0], c.den[1]] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&c.valuation.to_le_bytes());
        out.extend_from_slice(&c.weight.to_le_bytes());
        out.extend_from_slice(&c.lost.to_le_bytes());
        out.extend_from_slice(&c.count.to_le_bytes());
        out.push(c.zero as u8);
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or("truncated file")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], String> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u16(&mut self) -> Result<u16, String> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn i64(&mut self) -> Result<i64, String> {
        Ok(i64::from_le_bytes(self.array()?))
    }
}

pub fn decode(
    bytes: &[u8],
    z: &Zpw,
) -> Result<(CacheHeader, BTreeMap<[u8; 32], CachedLevel>), String> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not a level cache (bad magic)".into());
    }
    let format_version = r.u32()?;
    if format_version != FORMAT_VERSION {
        return Err(format!("unsupported format version {format_version}"));
    }
    let p = r.u64()?;
    let n = r.u32()?;
    let len = r.u16()? as usize;
    let model = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| "model tag is not UTF-8")?;
    let divisor_hash = r.u64()?;
    let j = r.u32()?;
    let count = r.u64()?;
    let header = CacheHeader {
        format_version,
        p,
        n,
        model,
        divisor_hash,
        j,
    };
    if (r.buf.len() - r.pos) as u64 != count.saturating_mul(RECORD_LEN as u64) {
        return Err(format!("expected {count} records of {RECORD_LEN} bytes"));
    }
    let mut entries = BTreeMap::new();
    let modulus = if (p, n) == (z.p, z.w) { z.m } else { u64::MAX };
    for _ in 0..count {
        let key: [u8; 32] = r.array()?;
        let level = r.u32()?;
        let limbs = [r.u64()?, r.u64()?, r.u64()?, r.u64()?];
        if limbs.iter().any(|&x| x >= modulus) {
            return Err("residue out of range".into());
        }
        let c = CachedLevel {
            level,
            num: [limbs[0], limbs[1]],
            den: [limbs[2], limbs[3]],
            valuation: r.i64()?,
            weight: r.i64()?,
            lost: r.u32()?,
            count: r.u64()?,
            zero: r.take(1)?[0] != 0,
        };
        entries.insert(key, c);
    }
    Ok((header, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rmc_core::rigidprod::Model;

    fn sample() -> (CacheHeader, BTreeMap<[u8; 32], CachedLevel>) {
        let spec = DivisorSpec::parse(Model::Sig21, 3, "5:1,2:-2").unwrap();
        let mut h = CacheHeader::for_job(&spec, 12);
        h.j = 3;
        let mut m = BTreeMap::new();
        for k in 0..4u8 {
            m.insert(
                [k; 32],
                CachedLevel {
                    level: k as u32,
                    num: [k as u64 + 1, 7],
                    den: [1, 0],
                    valuation: -(k as i64),
                    weight: 0,
                    lost: 1,
                    count: 99,
                    zero: k == 2,
                },
            );
        }
        (h, m)
    }

    #[test]
    fn bytes_round_trip() {
        let (h, m) = sample();
        let z = Zpw::new(3, 12).unwrap();
        let bytes = encode(&h, &m);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(decode(&bytes, &z).unwrap(), (h.clone(), m.clone()));
        assert!(decode(&bytes[..bytes.len() - 1], &z).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad, &z).is_err());
    }

    #[test]
    fn mismatched_header_resets() {
        let (h, m) = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("levels.bin");
        std::fs::write(&path, encode(&h, &m)).unwrap();
        let same = LevelCache::open(&path, CacheHeader { j: 0, ..h.clone() }).unwrap();
        assert_eq!((same.len(), same.reset, same.header().j), (4, false, 3));
        let other = LevelCache::open(&path, CacheHeader { n: 13, ..h }).unwrap();
        assert_eq!((other.len(), other.reset), (0, true));
    }
}
