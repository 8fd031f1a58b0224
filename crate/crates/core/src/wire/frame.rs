//! Byte-exact framing of the sifting messages.
//!
//! ```text
//! +----------------+--------+-------------------+
//! | length: u32 BE | type   | payload           |
//! +----------------+--------+-------------------+
//!   length = 1 + payload length, at most 2^24
//! ```
//!
//! All integers are big-endian. Round-id lists are strictly increasing, which
//! gives every message exactly one encoding.

use thiserror::Error;

/// Largest accepted value of the length field.
pub const MAX_FRAME_LEN: u32 = 1 << 24;

const HEADER_LEN: usize = 4;

pub const TYPE_HELLO: u8 = 0x01;
pub const TYPE_DISCARD_ANNOUNCE: u8 = 0x02;
pub const TYPE_KEPT_ANNOUNCE: u8 = 0x03;
pub const TYPE_SAMPLE_REQUEST: u8 = 0x04;
pub const TYPE_SAMPLE_REVEAL: u8 = 0x05;
pub const TYPE_QBER_REPORT: u8 = 0x06;
pub const TYPE_VERDICT: u8 = 0x07;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("round ids must be strictly increasing (got {prev} then {next})")]
    NonCanonical { prev: u64, next: u64 },
    #[error("bit value {0} is not 0 or 1")]
    BadBit(u8),
    #[error("frame length {0} exceeds the limit of {MAX_FRAME_LEN}")]
    Oversize(u64),
    #[error("malformed frame: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictCode {
    Proceed,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SiftMessage {
    Hello {
        version: u8,
        session_id: u64,
        round_count: u64,
    },
    /// Alice: rounds where she sent a decoy state.
    DiscardAnnounce(Vec<u64>),
    /// Bob: rounds with an unambiguous key-arm detection. No slot values.
    KeptAnnounce(Vec<u64>),
    SampleRequest(Vec<u64>),
    SampleReveal(Vec<(u64, u8)>),
    QberReport {
        numerator: u64,
        denominator: u64,
    },
    Verdict(VerdictCode),
}

impl SiftMessage {
    pub fn type_code(&self) -> u8 {
        match self {
            SiftMessage::Hello { .. } => TYPE_HELLO,
            SiftMessage::DiscardAnnounce(_) => TYPE_DISCARD_ANNOUNCE,
            SiftMessage::KeptAnnounce(_) => TYPE_KEPT_ANNOUNCE,
            SiftMessage::SampleRequest(_) => TYPE_SAMPLE_REQUEST,
            SiftMessage::SampleReveal(_) => TYPE_SAMPLE_REVEAL,
            SiftMessage::QberReport { .. } => TYPE_QBER_REPORT,
            SiftMessage::Verdict(_) => TYPE_VERDICT,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SiftMessage::Hello { .. } => "HELLO",
            SiftMessage::DiscardAnnounce(_) => "DISCARD_ANNOUNCE",
            SiftMessage::KeptAnnounce(_) => "KEPT_ANNOUNCE",
            SiftMessage::SampleRequest(_) => "SAMPLE_REQUEST",
            SiftMessage::SampleReveal(_) => "SAMPLE_REVEAL",
            SiftMessage::QberReport { .. } => "QBER_REPORT",
            SiftMessage::Verdict(_) => "VERDICT",
        }
    }
}

fn check_increasing(ids: impl Iterator<Item = u64>) -> Result<(), WireError> {
    let mut prev: Option<u64> = None;
    for id in ids {
        if let Some(p) = prev {
            if id <= p {
                return Err(WireError::NonCanonical { prev: p, next: id });
            }
        }
        prev = Some(id);
    }
    Ok(())
}

fn put_ids(out: &mut Vec<u8>, ids: &[u64]) -> Result<(), WireError> {
    check_increasing(ids.iter().copied())?;
    out.extend_from_slice(&(ids.len() as u64).to_be_bytes());
    for id in ids {
        out.extend_from_slice(&id.to_be_bytes());
    }
    Ok(())
}

pub fn encode_frame(msg: &SiftMessage) -> Result<Vec<u8>, WireError> {
    let mut out = vec![0u8; HEADER_LEN];
    out.push(msg.type_code());
    match msg {
        SiftMessage::Hello { version, session_id, round_count } => {
            out.push(*version);
            out.extend_from_slice(&session_id.to_be_bytes());
            out.extend_from_slice(&round_count.to_be_bytes());
        }
        SiftMessage::DiscardAnnounce(ids) | SiftMessage::KeptAnnounce(ids) | SiftMessage::SampleRequest(ids) => {
            put_ids(&mut out, ids)?
        }
        SiftMessage::SampleReveal(pairs) => {
            check_increasing(pairs.iter().map(|p| p.0))?;
            out.extend_from_slice(&(pairs.len() as u64).to_be_bytes());
            for &(id, bit) in pairs {
                if bit > 1 {
                    return Err(WireError::BadBit(bit));
                }
                out.extend_from_slice(&id.to_be_bytes());
                out.push(bit);
            }
        }
        SiftMessage::QberReport { numerator, denominator } => {
            out.extend_from_slice(&numerator.to_be_bytes());
            out.extend_from_slice(&denominator.to_be_bytes());
        }
        SiftMessage::Verdict(code) => out.push(match code {
            VerdictCode::Proceed => 0,
            VerdictCode::Abort => 1,
        }),
    }
    let len = (out.len() - HEADER_LEN) as u64;
    if len > u64::from(MAX_FRAME_LEN) {
        return Err(WireError::Oversize(len));
    }
    out[..HEADER_LEN].copy_from_slice(&(len as u32).to_be_bytes());
    Ok(out)
}

#[derive(Debug, PartialEq, Eq)]
pub enum Decoded<'a> {
    Message(SiftMessage, &'a [u8]),
    NeedMoreData,
}

struct Payload<'a> {
    bytes: &'a [u8],
}

impl<'a> Payload<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.bytes.len() < n {
            return Err(WireError::Malformed(format!(
                "payload truncated: wanted {n} more bytes, have {}",
                self.bytes.len()
            )));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// Reads a count and checks the rest of the payload holds exactly that
    /// many `item_len`-byte entries.
    fn count(&mut self, item_len: usize) -> Result<usize, WireError> {
        let count = self.u64()?;
        let have = self.bytes.len() as u64;
        if count.checked_mul(item_len as u64) != Some(have) {
            return Err(WireError::Malformed(format!(
                "count {count} inconsistent with {have} payload bytes of {item_len}-byte entries"
            )));
        }
        Ok(count as usize)
    }

    fn ids(&mut self) -> Result<Vec<u64>, WireError> {
        let n = self.count(8)?;
        let ids = (0..n).map(|_| self.u64()).collect::<Result<Vec<_>, _>>()?;
        check_increasing(ids.iter().copied()).map_err(|e| WireError::Malformed(e.to_string()))?;
        Ok(ids)
    }

    fn finish(&self) -> Result<(), WireError> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(WireError::Malformed(format!("{} trailing payload bytes", self.bytes.len())))
        }
    }
}

/// Decodes one frame from the front of `buf`.
pub fn decode_frame(buf: &[u8]) -> Result<Decoded<'_>, WireError> {
    if buf.len() < HEADER_LEN {
        return Ok(Decoded::NeedMoreData);
    }
    let len = u32::from_be_bytes(buf[..HEADER_LEN].try_into().expect("4 bytes"));
    if len > MAX_FRAME_LEN {
        return Err(WireError::Oversize(u64::from(len)));
    }
    if len == 0 {
        return Err(WireError::Malformed("zero length frame has no type byte".into()));
    }
    let end = HEADER_LEN + len as usize;
    if buf.len() < end {
        return Ok(Decoded::NeedMoreData);
    }
    let type_code = buf[HEADER_LEN];
    let mut p = Payload { bytes: &buf[HEADER_LEN + 1..end] };
    let msg = match type_code {
        TYPE_HELLO => SiftMessage::Hello { version: p.u8()?, session_id: p.u64()?, round_count: p.u64()? },
        TYPE_DISCARD_ANNOUNCE => SiftMessage::DiscardAnnounce(p.ids()?),
        TYPE_KEPT_ANNOUNCE => SiftMessage::KeptAnnounce(p.ids()?),
        TYPE_SAMPLE_REQUEST => SiftMessage::SampleRequest(p.ids()?),
        TYPE_SAMPLE_REVEAL => {
            let n = p.count(9)?;
            let mut pairs = Vec::with_capacity(n);
            for _ in 0..n {
                let id = p.u64()?;
                let bit = p.u8()?;
                if bit > 1 {
                    return Err(WireError::Malformed(format!("bit value {bit} for round {id}")));
                }
                pairs.push((id, bit));
            }
            check_increasing(pairs.iter().map(|x| x.0)).map_err(|e| WireError::Malformed(e.to_string()))?;
            SiftMessage::SampleReveal(pairs)
        }
        TYPE_QBER_REPORT => SiftMessage::QberReport { numerator: p.u64()?, denominator: p.u64()? },
        TYPE_VERDICT => SiftMessage::Verdict(match p.u8()? {
            0 => VerdictCode::Proceed,
            1 => VerdictCode::Abort,
            other => return Err(WireError::Malformed(format!("verdict code {other}"))),
        }),
        other => return Err(WireError::Malformed(format!("unknown type code {other:#04x}"))),
    };
    p.finish()?;
    Ok(Decoded::Message(msg, &buf[end..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex(bytes: &[u8]) -> String {
        bytes.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn golden_verdict() {
        let b = encode_frame(&SiftMessage::Verdict(VerdictCode::Proceed)).unwrap();
        assert_eq!(b, [0x00, 0x00, 0x00, 0x02, 0x07, 0x00]);
    }

    #[test]
    fn golden_hello() {
        let b = encode_frame(&SiftMessage::Hello { version: 1, session_id: 0, round_count: 8 }).unwrap();
        assert_eq!(b.len(), 22);
        assert_eq!(hex(&b), "00 00 00 12 01 01 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 08");
    }

    #[test]
    fn golden_discard() {
        let b = encode_frame(&SiftMessage::DiscardAnnounce(vec![3])).unwrap();
        assert_eq!(hex(&b), "00 00 00 11 02 00 00 00 00 00 00 00 01 00 00 00 00 00 00 00 03");
    }

    #[test]
    fn encoder_rejects_non_canonical() {
        assert_eq!(
            encode_frame(&SiftMessage::KeptAnnounce(vec![4, 4])),
            Err(WireError::NonCanonical { prev: 4, next: 4 })
        );
        assert_eq!(encode_frame(&SiftMessage::SampleReveal(vec![(1, 2)])), Err(WireError::BadBit(2)));
    }

    #[test]
    fn partial_buffers_need_more() {
        assert_eq!(decode_frame(&[0, 0, 0]), Ok(Decoded::NeedMoreData));
        let b = encode_frame(&SiftMessage::QberReport { numerator: 1, denominator: 4 }).unwrap();
        assert_eq!(decode_frame(&b[..b.len() - 1]), Ok(Decoded::NeedMoreData));
    }

    #[test]
    fn remaining_bytes_returned() {
        let mut b = encode_frame(&SiftMessage::Verdict(VerdictCode::Abort)).unwrap();
        b.extend_from_slice(&[9, 9]);
        match decode_frame(&b).unwrap() {
            Decoded::Message(m, rest) => {
                assert_eq!(m, SiftMessage::Verdict(VerdictCode::Abort));
                assert_eq!(rest, &[9, 9]);
            }
            Decoded::NeedMoreData => panic!("complete frame"),
        }
    }

    #[test]
    fn malformed_frames() {
        assert!(matches!(decode_frame(&[0, 0, 0, 1, 0xff]), Err(WireError::Malformed(_))));
        assert!(matches!(decode_frame(&[0x01, 0, 0, 1, 0x07]), Err(WireError::Oversize(_))));
        assert!(matches!(decode_frame(&[0, 0, 0, 0]), Err(WireError::Malformed(_))));
        assert!(matches!(decode_frame(&[0, 0, 0, 2, 0x07, 0x05]), Err(WireError::Malformed(_))));
        // count says 2 ids but only one present
        let mut b = vec![0, 0, 0, 17, 0x03];
        b.extend_from_slice(&2u64.to_be_bytes());
        b.extend_from_slice(&5u64.to_be_bytes());
        assert!(matches!(decode_frame(&b), Err(WireError::Malformed(_))));
        // decreasing ids
        let mut b = vec![0, 0, 0, 25, 0x03];
        b.extend_from_slice(&2u64.to_be_bytes());
        b.extend_from_slice(&5u64.to_be_bytes());
        b.extend_from_slice(&4u64.to_be_bytes());
        assert!(matches!(decode_frame(&b), Err(WireError::Malformed(_))));
        // reveal with bit 2
        let mut b = vec![0, 0, 0, 18, 0x05];
        b.extend_from_slice(&1u64.to_be_bytes());
        b.extend_from_slice(&5u64.to_be_bytes());
        b.push(2);
        assert!(matches!(decode_frame(&b), Err(WireError::Malformed(_))));
        // hello with a trailing byte
        let mut b = encode_frame(&SiftMessage::Hello { version: 1, session_id: 2, round_count: 3 }).unwrap();
        b[3] += 1;
        b.push(0);
        assert!(matches!(decode_frame(&b), Err(WireError::Malformed(_))));
    }

    #[test]
    fn huge_count_does_not_allocate() {
        let mut b = vec![0, 0, 0, 9, 0x02];
        b.extend_from_slice(&u64::MAX.to_be_bytes());
        assert!(matches!(decode_frame(&b), Err(WireError::Malformed(_))));
    }
}
