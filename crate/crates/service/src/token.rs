//! Opaque identifiers. Session ids and stimulus tokens are keyed MACs over
//! the study key, so the server keeps no token table and the client learns
//! nothing about conditions or utterances.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use hmac::{Hmac, KeyInit, Mac};
use sha2::Sha256;

type HmacSha256 = Hmac<Sha256>;

const SID_LEN: usize = 16;
const TAG_LEN: usize = 12;
const TOKEN_LEN: usize = SID_LEN + 4 + TAG_LEN;

fn mac(key: &[u8; 32], parts: &[&[u8]]) -> [u8; 32] {
    let mut m = HmacSha256::new_from_slice(key).expect("HMAC accepts any key length");
    for p in parts {
        m.update(p);
    }
    let mut out = [0u8; 32];
    out.copy_from_slice(&m.finalize().into_bytes());
    out
}

/// Stable per (study key, subject) so a returning subject resumes the same session.
pub fn session_id(key: &[u8; 32], subject_id: &str) -> String {
    hex::encode(&mac(key, &[b"session\0", subject_id.as_bytes()])[..SID_LEN])
}

fn mask(key: &[u8; 32], sid: &[u8]) -> [u8; 4] {
    let m = mac(key, &[b"mask\0", sid]);
    [m[0], m[1], m[2], m[3]]
}

pub fn encode_token(key: &[u8; 32], session_id: &str, stimulus: usize) -> String {
    let sid = hex::decode(session_id).expect("session ids are hex");
    let idx = u32::try_from(stimulus)
        .expect("stimulus index fits u32")
        .to_le_bytes();
    let mask = mask(key, &sid);
    let mut bytes = Vec::with_capacity(TOKEN_LEN);
    bytes.extend_from_slice(&sid);
    bytes.extend(idx.iter().zip(mask).map(|(a, b)| a ^ b));
    bytes.extend_from_slice(&mac(key, &[b"token\0", &sid, &idx])[..TAG_LEN]);
    URL_SAFE_NO_PAD.encode(bytes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedToken {
    pub session_id: String,
    pub stimulus: usize,
}

/// `None` for anything not minted with this key.
pub fn decode_token(key: &[u8; 32], token: &str) -> Option<DecodedToken> {
    let bytes = URL_SAFE_NO_PAD.decode(token).ok()?;
    if bytes.len() != TOKEN_LEN {
        return None;
    }
    let (sid, rest) = bytes.split_at(SID_LEN);
    let (masked, tag) = rest.split_at(4);
    let mask = mask(key, sid);
    let idx: [u8; 4] = std::array::from_fn(|i| masked[i] ^ mask[i]);
    let mut m = HmacSha256::new_from_slice(key).expect("HMAC accepts any key length");
    m.update(b"token\0");
    m.update(sid);
    m.update(&idx);
    m.verify_truncated_left(tag).ok()?;
    Some(DecodedToken {
        session_id: hex::encode(sid),
        stimulus: u32::from_le_bytes(idx) as usize,
    })
}
