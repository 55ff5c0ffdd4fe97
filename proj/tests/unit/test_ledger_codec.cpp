#include <doctest.h>

#include "iotchain/ledger/codec.hpp"
#include "iotchain/ledger/types.hpp"

using namespace iotchain;
using namespace iotchain::ledger;

TEST_SUITE("ledger.codec") {

TEST_CASE("scaled value parse and format round trip") {
  struct Case {
    const char* text;
    std::int64_t raw;
    const char* canonical;
  };
  const Case cases[] = {
      {"23", 23'000'000, "23"},
      {"11.5", 11'500'000, "11.5"},
      {"0", 0, "0"},
      {"0.000001", 1, "0.000001"},
      {"-4.25", -4'250'000, "-4.25"},
      {"-0.5", -500'000, "-0.5"},
      {"100.100000", 100'100'000, "100.1"},
      {"9007199254.740993", 9'007'199'254'740'993, "9007199254.740993"},
  };
  for (const Case& c : cases) {
    auto parsed = ScaledValue::parse(c.text);
    REQUIRE(parsed.has_value());
    CHECK(parsed->raw == c.raw);
    CHECK(parsed->str() == c.canonical);
    CHECK(ScaledValue::parse(parsed->str()) == parsed);
  }
}

TEST_CASE("scaled value rejects malformed text") {
  for (const char* bad : {"", ".", "1.", ".5", "1.2345678", "1e5", " 1", "1 ", "+1", "--1",
                          "12345678901234", "nan", "inf"}) {
    CHECK(!ScaledValue::parse(bad).has_value());
  }
}

TEST_CASE("scaled value from double rounds") {
  CHECK(ScaledValue::from_double(23.0).raw == 23'000'000);
  CHECK(ScaledValue::from_double(0.1).raw == 100'000);
  CHECK(ScaledValue::from_double(-1.5).raw == -1'500'000);
  CHECK(ScaledValue::from_double(0.97).str() == "0.97");
}

TEST_CASE("writer reader primitives round trip") {
  CanonicalWriter w;
  w.u8(7);
  w.u32(0xdeadbeef);
  w.u64(0x0123456789abcdefULL);
  w.i64(-42);
  w.str("hello");
  w.blob(Bytes{1, 2, 3});

  CanonicalReader r(w.bytes());
  CHECK(r.u8().value() == 7);
  CHECK(r.u32().value() == 0xdeadbeef);
  CHECK(r.u64().value() == 0x0123456789abcdefULL);
  CHECK(r.i64().value() == -42);
  CHECK(r.str().value() == "hello");
  CHECK(r.blob().value() == Bytes{1, 2, 3});
  CHECK(r.exhausted());
}

TEST_CASE("canonical integers are big endian") {
  CanonicalWriter w;
  w.u32(0x01020304);
  CHECK(w.bytes() == Bytes{0x01, 0x02, 0x03, 0x04});
}

Transaction sample_update() {
  Transaction tx;
  tx.payload = SensorUpdate{"s1", ScaledValue::from_raw(11'000'000)};
  tx.submitter = "d1";
  tx.nonce = 3;
  tx.tx_id = tx_digest(tx);
  tx.signature = Bytes(32, 0xab);
  return tx;
}

TEST_CASE("transaction encode decode round trip") {
  Transaction original = sample_update();
  auto decoded = decode_tx(encode_tx(original));
  REQUIRE(decoded.ok());
  CHECK(decoded.value() == original);

  Transaction alert;
  alert.payload = Alert{"d2", "Dos Hulk", ScaledValue::from_double(0.98), true};
  alert.submitter = "gw0";
  alert.nonce = 9;
  alert.tx_id = tx_digest(alert);
  alert.signature = Bytes(32, 0x01);
  auto alert_decoded = decode_tx(encode_tx(alert));
  REQUIRE(alert_decoded.ok());
  CHECK(alert_decoded.value() == alert);

  Transaction reg_device;
  reg_device.payload = RegisterDevice{"d9", "gw1"};
  reg_device.submitter = "admin";
  reg_device.tx_id = tx_digest(reg_device);
  reg_device.signature = Bytes(32, 0x02);
  auto rd = decode_tx(encode_tx(reg_device));
  REQUIRE(rd.ok());
  CHECK(rd.value() == reg_device);

  Transaction reg_sensor;
  reg_sensor.payload = RegisterSensor{"s9", "d9"};
  reg_sensor.submitter = "admin";
  reg_sensor.nonce = 1;
  reg_sensor.tx_id = tx_digest(reg_sensor);
  reg_sensor.signature = Bytes(32, 0x03);
  auto rs = decode_tx(encode_tx(reg_sensor));
  REQUIRE(rs.ok());
  CHECK(rs.value() == reg_sensor);
}

TEST_CASE("equal values encode identically") {
  Transaction a = sample_update();
  Transaction b = sample_update();
  CHECK(encode_tx(a) == encode_tx(b));
  CHECK(tx_digest(a) == tx_digest(b));

  b.nonce = 4;
  b.tx_id = tx_digest(b);
  CHECK(encode_tx(a) != encode_tx(b));
  CHECK(tx_digest(a) != tx_digest(b));
}

TEST_CASE("decode rejects damaged input") {
  Bytes good = encode_tx(sample_update());

  Bytes truncated(good.begin(), good.end() - 3);
  CHECK(!decode_tx(truncated).ok());

  Bytes trailing = good;
  trailing.push_back(0x00);
  CHECK(!decode_tx(trailing).ok());

  Bytes bad_tag = good;
  bad_tag[4] = 0x77;  // payload tag lives right after the outer length prefix
  CHECK(!decode_tx(bad_tag).ok());

  CHECK(!decode_tx(Bytes{}).ok());
}

TEST_CASE("chain config round trip and digest stability") {
  ChainConfig config;
  config.chain_id = "testnet";
  config.devices.push_back({"7609", "gw0", DeviceStatus::Active});
  config.sensors.push_back({"1437", "7609", ScaledValue::from_double(23.0), 0});

  auto decoded = decode_chain_config(encode_chain_config(config));
  REQUIRE(decoded.ok());
  CHECK(decoded.value() == config);
  CHECK(chain_config_digest(config) == chain_config_digest(decoded.value()));

  ChainConfig other = config;
  other.chain_id = "testnet2";
  CHECK(chain_config_digest(config) != chain_config_digest(other));
}

TEST_CASE("block digest covers every field") {
  Block block;
  block.height = 5;
  block.proposer = "v0";
  block.timestamp = 90;
  block.txs.push_back(sample_update());
  Digest base = block_digest(block);

  Block changed = block;
  changed.height = 6;
  CHECK(block_digest(changed) != base);

  changed = block;
  changed.timestamp = 91;
  CHECK(block_digest(changed) != base);

  changed = block;
  changed.proposer = "v1";
  CHECK(block_digest(changed) != base);

  changed = block;
  changed.prev_hash.bytes[0] ^= 1;
  CHECK(block_digest(changed) != base);

  changed = block;
  changed.txs[0].signature[0] ^= 1;
  CHECK(block_digest(changed) != base);

  changed = block;
  changed.txs.clear();
  CHECK(block_digest(changed) != base);
}

}  // TEST_SUITE
