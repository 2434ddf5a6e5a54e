//! Packet fixtures: one-packet-per-line hex dumps and raw-IP pcap files.

use std::io::{BufRead, Read, Write};
use std::time::Duration;

use pcap_file::pcap::{PcapHeader, PcapPacket, PcapReader, PcapWriter};
use pcap_file::DataLink;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("line {line}: {source}")]
    Hex {
        line: usize,
        #[source]
        source: hex::FromHexError,
    },
    #[error("pcap: {0}")]
    Pcap(#[from] pcap_file::PcapError),
    #[error("pcap link type {0:?} is not raw IP")]
    LinkType(DataLink),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads lowercase (or uppercase) hex, one packet per non-empty line.
pub fn read_hex_fixtures(reader: impl BufRead) -> Result<Vec<Vec<u8>>, FixtureError> {
    let mut packets = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bytes = hex::decode(line).map_err(|source| FixtureError::Hex {
            line: idx + 1,
            source,
        })?;
        packets.push(bytes);
    }
    Ok(packets)
}

pub fn write_hex_fixtures<'a>(
    mut writer: impl Write,
    packets: impl IntoIterator<Item = &'a [u8]>,
) -> Result<(), FixtureError> {
    for pkt in packets {
        writeln!(writer, "{}", hex::encode(pkt))?;
    }
    Ok(())
}

/// Raw-IP pcap (link type 101); packet i is stamped at i microseconds.
pub fn write_pcap<'a, W: Write>(
    writer: W,
    packets: impl IntoIterator<Item = &'a [u8]>,
) -> Result<W, FixtureError> {
    let header = PcapHeader {
        datalink: DataLink::RAW,
        ..Default::default()
    };
    let mut pcap = PcapWriter::with_header(writer, header)?;
    for (i, pkt) in packets.into_iter().enumerate() {
        let ts = Duration::from_micros(i as u64);
        pcap.write_packet(&PcapPacket::new(ts, pkt.len() as u32, pkt))?;
    }
    Ok(pcap.into_writer())
}

pub fn read_pcap(reader: impl Read) -> Result<Vec<Vec<u8>>, FixtureError> {
    let mut pcap = PcapReader::new(reader)?;
    let link = pcap.header().datalink;
    if !matches!(link, DataLink::RAW | DataLink::IPV6) {
        return Err(FixtureError::LinkType(link));
    }
    let mut packets = Vec::new();
    while let Some(pkt) = pcap.next_packet() {
        packets.push(pkt?.data.into_owned());
    }
    Ok(packets)
}
