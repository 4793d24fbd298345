//! Erasure-code roundtrip: encode a message into n shares and decode it
//! back from every subset of t+1 shares. The code is an erasure code, not
//! an error-correcting one: a tampered share that scrambles the length
//! frame is flagged as garbage, while deeper corruption is the job of the
//! agreement layer, which only combines shares backed by matching votes.

use ocioraba::codec::{ec_decode, ec_encode};
use ocioraba::core::BitString;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let (n, t) = (7, 2);
    let k = t + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let msg = BitString::random(&mut rng, 96);
    println!("message      {}", msg.to_hex());

    let shares = ec_encode(n, k, &msg).expect("encode");
    for s in &shares {
        println!("share {}      {} bits", s.index, s.bit_len());
    }

    // Any k of the n shares reproduce the message exactly.
    let mut subsets = 0;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let pick = [shares[a].clone(), shares[b].clone(), shares[c].clone()];
                let decoded = ec_decode(n, k, &pick).expect("decode");
                assert_eq!(decoded.into_bits(), msg);
                subsets += 1;
            }
        }
    }
    println!("decoded from all {subsets} subsets of {k} shares");

    // Share 1 is systematic and starts with the length prefix; flipping a
    // bit there breaks the frame and the decoder reports garbage instead
    // of inventing a message.
    let mut bad = shares[0].clone();
    bad.data[0] ^= 1;
    let pick = [bad, shares[1].clone(), shares[2].clone()];
    let decoded = ec_decode(n, k, &pick).expect("decode");
    println!("tampered length frame: garbage detected = {}", decoded.is_garbage());

    // The same positions decode cleanly again without the tampered share.
    let pick = [shares[3].clone(), shares[1].clone(), shares[2].clone()];
    let decoded = ec_decode(n, k, &pick).expect("decode");
    println!("clean subset again:    recovered = {}", decoded.into_bits() == msg);
}
