//! Append-only public ledger with hash commitments.
//!
//! Amounts are fixed point with nine decimals. A commitment is
//! `SHA-256(bidder as u64 BE || amount as u64 BE || 32-byte pad)`.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{input, Error, Result};
use crate::matroid::{DownwardClosedFamily, ElementId, ElementSet, Feasibility, Matroid};
use crate::valuedist::VirtualValueProfile;

pub type Amount = u64;

pub const UNITS_PER_ONE: f64 = 1e9;

/// Largest representable value (keeps `amount * 1e9` exact in a u64).
pub const MAX_VALUE: f64 = 1e9;

pub fn quantize(x: f64) -> Result<Amount> {
    if !(x.is_finite() && (0.0..=MAX_VALUE).contains(&x)) {
        return input(format!("amount {x} outside [0, {MAX_VALUE}]"));
    }
    Ok((x * UNITS_PER_ONE).round() as Amount)
}

pub fn to_value(a: Amount) -> f64 {
    a as f64 / UNITS_PER_ONE
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hash32(pub [u8; 32]);

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", hex::encode(self.0))
    }
}

impl Serialize for Hash32 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for Hash32 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(Hash32(out))
    }
}

impl Hash32 {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut b = [0u8; 32];
        rng.fill_bytes(&mut b);
        Hash32(b)
    }
}

pub fn commitment(bidder: ElementId, amount: Amount, pad: &Hash32) -> Hash32 {
    let mut h = Sha256::new();
    h.update((bidder as u64).to_be_bytes());
    h.update(amount.to_be_bytes());
    h.update(pad.0);
    Hash32(h.finalize().into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "spec", rename_all = "snake_case")]
pub enum ConstraintSpec {
    Matroid(Matroid),
    Family(DownwardClosedFamily),
}

impl ConstraintSpec {
    pub fn as_feasibility(&self) -> &dyn Feasibility {
        match self {
            ConstraintSpec::Matroid(m) => m,
            ConstraintSpec::Family(f) => f,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum ProtocolKind {
    Dra,
    /// Ascending variant; prices follow `p -> max(factor * p, floor)`.
    Adra { factor: f64, floor: f64, modified: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
pub enum Entry {
    Announce { protocol: ProtocolKind },
    Commit { bidder: ElementId, digest: Hash32 },
    Deposit { bidder: ElementId, amount: Amount },
    DeclareConstraint { constraint: ConstraintSpec },
    /// Profile `k` belongs to bidder `k`.
    DeclareDistributions { profiles: Vec<VirtualValueProfile> },
    EndInit,
    LevelAdvance { level: u32, price: f64, is_final: bool },
    Reveal { bidder: ElementId, amount: Amount, pad: Hash32 },
    /// Virtual price and the posted price it maps to.
    Promise { bidder: ElementId, virtual_price: f64, price: f64 },
    EndReveal,
    Burn { bidder: ElementId, amount: Amount },
    Allocate { set: ElementSet },
    Pay { bidder: ElementId, amount: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Empty,
    Init,
    Open,
    Settle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rejected {
    pub entry: Entry,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Ledger {
    entries: Vec<Entry>,
    rejected: Vec<Rejected>,
    phase: Phase,
    committed: ElementSet,
    revealed: ElementSet,
}

impl Default for Ledger {
    fn default() -> Self {
        Ledger::new()
    }
}

impl Ledger {
    pub fn new() -> Self {
        Ledger {
            entries: Vec::new(),
            rejected: Vec::new(),
            phase: Phase::Empty,
            committed: ElementSet::EMPTY,
            revealed: ElementSet::EMPTY,
        }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Entries refused by [`Ledger::append`], with the reason.
    pub fn rejected(&self) -> &[Rejected] {
        &self.rejected
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    fn check(&self, e: &Entry) -> std::result::Result<(), String> {
        use Phase::*;
        let phase_ok = |ok: &[Phase]| {
            if ok.contains(&self.phase) {
                Ok(())
            } else {
                Err(format!("not allowed in phase {:?}", self.phase))
            }
        };
        let committed = |b: ElementId| {
            if self.committed.contains(b) {
                Ok(())
            } else {
                Err(format!("bidder {b} has no commitment"))
            }
        };
        match e {
            Entry::Announce { .. } => phase_ok(&[Empty]),
            Entry::Commit { bidder, .. } => {
                phase_ok(&[Init])?;
                if *bidder >= 64 {
                    Err(format!("bidder id {bidder} too large"))
                } else if self.committed.contains(*bidder) {
                    Err(format!("bidder {bidder} already committed"))
                } else {
                    Ok(())
                }
            }
            Entry::Deposit { bidder, .. } => {
                phase_ok(&[Init, Open])?;
                committed(*bidder)
            }
            Entry::DeclareConstraint { .. } | Entry::DeclareDistributions { .. } | Entry::EndInit => {
                phase_ok(&[Init])
            }
            Entry::LevelAdvance { .. } | Entry::EndReveal => phase_ok(&[Open]),
            Entry::Promise { bidder, .. } => {
                phase_ok(&[Open])?;
                committed(*bidder)
            }
            Entry::Reveal { bidder, .. } => {
                phase_ok(&[Open])?;
                committed(*bidder)?;
                if self.revealed.contains(*bidder) {
                    Err(format!("bidder {bidder} already revealed"))
                } else {
                    Ok(())
                }
            }
            Entry::Burn { bidder, .. } => {
                phase_ok(&[Open, Settle])?;
                committed(*bidder)
            }
            Entry::Allocate { .. } | Entry::Pay { .. } => phase_ok(&[Settle]),
        }
    }

    /// Appends `e` or records it in the rejected log and returns an error.
    pub fn append(&mut self, e: Entry) -> Result<()> {
        if let Err(reason) = self.check(&e) {
            let msg = format!("{e:?}: {reason}");
            self.rejected.push(Rejected { entry: e, reason });
            return Err(Error::Ledger(msg));
        }
        match &e {
            Entry::Announce { .. } => self.phase = Phase::Init,
            Entry::Commit { bidder, .. } => self.committed.insert(*bidder),
            Entry::EndInit => self.phase = Phase::Open,
            Entry::Reveal { bidder, .. } => self.revealed.insert(*bidder),
            Entry::EndReveal => self.phase = Phase::Settle,
            _ => {}
        }
        self.entries.push(e);
        Ok(())
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn dump(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(f)
    }

    /// Rebuilds a ledger, re-checking every entry.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Ledger> {
        let mut l = Ledger::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            l.append(serde_json::from_str(&line)?)?;
        }
        Ok(l)
    }

    pub fn load(path: &Path) -> Result<Ledger> {
        Self::read_jsonl(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn protocol(&self) -> Option<ProtocolKind> {
        self.entries.iter().find_map(|e| match e {
            Entry::Announce { protocol } => Some(*protocol),
            _ => None,
        })
    }

    pub fn commitments(&self) -> Vec<(ElementId, Hash32)> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                Entry::Commit { bidder, digest } => Some((*bidder, *digest)),
                _ => None,
            })
            .collect()
    }

    /// Total deposited per bidder id.
    pub fn deposits(&self) -> Vec<(ElementId, Amount)> {
        let mut out: Vec<(ElementId, Amount)> = Vec::new();
        for e in &self.entries {
            if let Entry::Deposit { bidder, amount } = e {
                match out.iter_mut().find(|d| d.0 == *bidder) {
                    Some(d) => d.1 += amount,
                    None => out.push((*bidder, *amount)),
                }
            }
        }
        out
    }

    pub fn constraint(&self) -> Option<&ConstraintSpec> {
        self.entries.iter().find_map(|e| match e {
            Entry::DeclareConstraint { constraint } => Some(constraint),
            _ => None,
        })
    }

    pub fn profiles(&self) -> Option<&[VirtualValueProfile]> {
        self.entries.iter().find_map(|e| match e {
            Entry::DeclareDistributions { profiles } => Some(profiles.as_slice()),
            _ => None,
        })
    }

    pub fn burned(&self) -> Amount {
        self.entries
            .iter()
            .map(|e| match e {
                Entry::Burn { amount, .. } => *amount,
                _ => 0,
            })
            .sum()
    }

    /// Payments received from bidders in `real` minus everything burned.
    pub fn auctioneer_net(&self, real: ElementSet) -> f64 {
        let paid: f64 = self
            .entries
            .iter()
            .map(|e| match e {
                Entry::Pay { bidder, amount } if real.contains(*bidder) => *amount,
                _ => 0.0,
            })
            .sum();
        paid - to_value(self.burned())
    }
}

/// A ledger shared between threads; appends are serialized by a mutex.
#[derive(Clone, Default)]
pub struct SharedLedger(Arc<Mutex<Ledger>>);

impl SharedLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&self, e: Entry) -> Result<()> {
        self.0.lock().expect("ledger lock poisoned").append(e)
    }

    pub fn snapshot(&self) -> Ledger {
        self.0.lock().expect("ledger lock poisoned").clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn opened() -> Ledger {
        let mut l = Ledger::new();
        l.append(Entry::Announce { protocol: ProtocolKind::Dra }).unwrap();
        l.append(Entry::Commit { bidder: 0, digest: Hash32([1; 32]) }).unwrap();
        l
    }

    #[test]
    fn quantize_round_trip() {
        assert_eq!(quantize(1.5).unwrap(), 1_500_000_000);
        assert_eq!(to_value(quantize(0.9).unwrap()), 0.9);
        assert!(quantize(-1.0).is_err());
        assert!(quantize(f64::INFINITY).is_err());
    }

    #[test]
    fn commitment_binds_all_fields() {
        let pad = Hash32([7; 32]);
        let c = commitment(1, 5, &pad);
        assert_eq!(c, commitment(1, 5, &pad));
        assert_ne!(c, commitment(2, 5, &pad));
        assert_ne!(c, commitment(1, 6, &pad));
        assert_ne!(c, commitment(1, 5, &Hash32([8; 32])));
    }

    #[test]
    fn commitment_known_vector() {
        // SHA-256 of 48 zero bytes
        let c = commitment(0, 0, &Hash32([0; 32]));
        assert_eq!(
            hex::encode(c.0),
            "17b0761f87b081d5cf10757ccc89f12be355c70e2e29df288b65b30710dcbcd1"
        );
        let pad: [u8; 32] = std::array::from_fn(|k| k as u8);
        let c = commitment(3, quantize(1.5).unwrap(), &Hash32(pad));
        assert_eq!(
            hex::encode(c.0),
            "5af1ea53eb7ae72e81157f1faaf393446f89c44ba5467589007c00ac585911ec"
        );
    }

    #[test]
    fn duplicate_commit_rejected() {
        let mut l = opened();
        assert!(l.append(Entry::Commit { bidder: 0, digest: Hash32([2; 32]) }).is_err());
        assert_eq!(l.rejected().len(), 1);
        assert_eq!(l.entries().len(), 2);
    }

    #[test]
    fn reveal_before_end_init_rejected() {
        let mut l = opened();
        let r = Entry::Reveal { bidder: 0, amount: 1, pad: Hash32([0; 32]) };
        assert!(l.append(r.clone()).is_err());
        l.append(Entry::EndInit).unwrap();
        l.append(r.clone()).unwrap();
        assert!(l.append(r).is_err());
    }

    #[test]
    fn settlement_only_after_end_reveal() {
        let mut l = opened();
        l.append(Entry::EndInit).unwrap();
        assert!(l.append(Entry::Pay { bidder: 0, amount: 1.0 }).is_err());
        l.append(Entry::EndReveal).unwrap();
        l.append(Entry::Pay { bidder: 0, amount: 1.0 }).unwrap();
        l.append(Entry::Burn { bidder: 0, amount: 250_000_000 }).unwrap();
        assert_eq!(l.auctioneer_net(ElementSet::singleton(0)), 0.75);
        assert!(l.append(Entry::Commit { bidder: 1, digest: Hash32([0; 32]) }).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut l = Ledger::new();
        l.append(Entry::Announce { protocol: ProtocolKind::Adra { factor: 2.0, floor: 1e-3, modified: false } })
            .unwrap();
        let pad = Hash32::random(&mut rng);
        l.append(Entry::Commit { bidder: 0, digest: commitment(0, 7, &pad) }).unwrap();
        l.append(Entry::DeclareConstraint { constraint: ConstraintSpec::Matroid(Matroid::complete_graph(3).unwrap()) })
            .unwrap();
        l.append(Entry::DeclareDistributions { profiles: vec![VirtualValueProfile::exponential(1.3).unwrap()] })
            .unwrap();
        l.append(Entry::EndInit).unwrap();
        l.append(Entry::LevelAdvance { level: 1, price: 0.1 + 0.2, is_final: false }).unwrap();
        l.append(Entry::Reveal { bidder: 0, amount: 7, pad }).unwrap();
        let mut buf = Vec::new();
        l.write_jsonl(&mut buf).unwrap();
        let back = Ledger::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back.entries(), l.entries());
    }

    #[test]
    fn shared_ledger_serializes_threads() {
        let l = SharedLedger::new();
        l.append(Entry::Announce { protocol: ProtocolKind::Dra }).unwrap();
        std::thread::scope(|s| {
            for t in 0..4 {
                let l = l.clone();
                s.spawn(move || {
                    for k in 0..8 {
                        l.append(Entry::Commit { bidder: t * 8 + k, digest: Hash32([0; 32]) }).unwrap();
                    }
                });
            }
        });
        let snap = l.snapshot();
        assert_eq!(snap.commitments().len(), 32);
        assert!(snap.rejected().is_empty());
    }
}
