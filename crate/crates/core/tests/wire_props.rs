mod common;

use ioam6::wire::{
    encode_padding, head_padding, node_data_len, parse_options, parse_packet, read_hex_fixtures,
    read_pcap, write_hex_fixtures, write_pcap, OptionBody, TRACE_SUPPORTED_BITS,
};
use proptest::prelude::*;

use common::*;

proptest! {
    #[test]
    fn packets_round_trip(seed in any::<u64>()) {
        let view = random_view(&mut rng(seed));
        let bytes = encode(&view);
        let parsed = parse_packet(&bytes).unwrap();
        prop_assert_eq!(&parsed, &view);
        prop_assert_eq!(encode(&parsed), bytes);
    }

    #[test]
    fn truncation_never_panics(seed in any::<u64>(), cut in 0usize..700) {
        let bytes = encode(&random_view(&mut rng(seed)));
        let cut = cut.min(bytes.len());
        let _ = parse_packet(&bytes[..cut]);
    }

    #[test]
    fn arbitrary_option_bytes_never_panic(mut eh in proptest::collection::vec(any::<u8>(), 2..64)) {
        let len = eh.len() / 8 * 8;
        eh.truncate(len.max(8));
        eh.resize(len.max(8), 0);
        if let Ok(opts) = parse_options(&eh) {
            let total: usize = opts.iter().map(|o| o.total_len).sum();
            prop_assert_eq!(total + 2, eh.len());
        }
    }

    #[test]
    fn head_padding_is_minimal(offset in 0usize..4096, shift in 0u32..4, y in 0usize..8) {
        let x = 1usize << shift;
        let y = y % x;
        let p = head_padding(offset, x, y);
        prop_assert!(p < x);
        prop_assert_eq!((offset + p) % x, y);
    }

    #[test]
    fn node_data_len_counts_words(t in 0u16..=TRACE_SUPPORTED_BITS) {
        prop_assert_eq!(node_data_len(t).unwrap(), 4 * t.count_ones() as usize);
    }
}

#[test]
fn padding_options_decode_as_padding() {
    for len in 1..=7 {
        let mut eh = vec![59, 1];
        eh.extend(encode_padding(len).unwrap());
        // Pad1 up to 16 octets
        eh.resize(16, 0);
        let opts = parse_options(&eh).unwrap();
        assert!(opts
            .iter()
            .all(|o| matches!(o.body, OptionBody::Pad1 | OptionBody::PadN { .. })));
    }
    assert!(encode_padding(0).is_err());
    assert!(encode_padding(8).is_err());
}

#[test]
fn fixtures_round_trip() {
    let mut r = rng(42);
    let packets: Vec<Vec<u8>> = (0..20).map(|_| encode(&random_view(&mut r))).collect();

    let mut hex = Vec::new();
    write_hex_fixtures(&mut hex, packets.iter().map(Vec::as_slice)).unwrap();
    assert_eq!(read_hex_fixtures(&hex[..]).unwrap(), packets);

    let mut pcap = Vec::new();
    write_pcap(&mut pcap, packets.iter().map(Vec::as_slice)).unwrap();
    assert_eq!(read_pcap(&pcap[..]).unwrap(), packets);
}
