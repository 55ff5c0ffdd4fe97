#include <doctest.h>

#include <sstream>

#include "iotchain/common/rng.hpp"
#include "iotchain/ledger/chain.hpp"
#include "iotchain/ledger/codec.hpp"
#include "iotchain/ledger/txbuild.hpp"

using namespace iotchain;
using namespace iotchain::ledger;
using membership::HmacSigner;
using membership::Registry;
using membership::Role;

namespace {

struct Fixture {
  Registry registry;
  ChainConfig config;

  Fixture() {
    registry = Registry::bootstrap("admin", Bytes(32, 1));
    membership::Principal admin{"admin", Role::Admin};
    REQUIRE(registry.register_member(admin, {"gw0", Role::Gateway, Bytes(32, 2)}).ok());
    REQUIRE(registry.register_member(admin, {"7609", Role::Device, Bytes(32, 3)}).ok());
    REQUIRE(registry.register_member(admin, {"d1", Role::Device, Bytes(32, 4)}).ok());
    REQUIRE(registry.register_member(admin, {"v0", Role::Validator, Bytes(32, 5)}).ok());

    config.chain_id = "testnet";
    config.devices.push_back({"7609", "gw0", DeviceStatus::Active});
    config.devices.push_back({"d1", "gw0", DeviceStatus::Active});
    config.sensors.push_back({"1437", "7609", ScaledValue::from_double(23.0), 0});
    config.sensors.push_back({"1", "d1", ScaledValue::from_double(5.0), 0});
  }

  HmacSigner signer() const { return HmacSigner(registry); }

  Transaction signed_tx(TxPayload payload, std::string submitter, std::uint64_t nonce = 0) const {
    return make_signed_tx(std::move(payload), std::move(submitter), nonce, signer());
  }

  Status<AppendError> append_txs(Chain& chain, std::vector<Transaction> txs,
                                 std::uint64_t timestamp = 10) {
    Block block = chain.build_next(std::move(txs), "v0", timestamp);
    return chain.append(block, registry, signer());
  }
};

}  // namespace

TEST_SUITE("ledger.chain") {

TEST_CASE("genesis exposes configured assets") {
  Fixture f;
  Chain chain(f.config);

  CHECK(chain.height() == 0);
  CHECK(chain.blocks().size() == 1);
  CHECK(chain.tip().prev_hash == chain_config_digest(f.config));

  const SensorAsset* sensor = chain.state().sensor("1437");
  REQUIRE(sensor != nullptr);
  CHECK(sensor->device_id == "7609");
  CHECK(sensor->last_value.str() == "23");
  CHECK(sensor->updated_at == 0);
  CHECK(chain.state().device("7609")->status == DeviceStatus::Active);
}

TEST_CASE("sensor update by owning device and by gateway") {
  Fixture f;
  Chain chain(f.config);

  auto ok = f.append_txs(chain, {f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(11.0)},
                                             "d1")});
  REQUIRE(ok.ok());
  CHECK(chain.height() == 1);
  CHECK(chain.state().sensor("1")->last_value.str() == "11");
  CHECK(chain.state().sensor("1")->updated_at == 1);

  auto by_gateway = f.append_txs(
      chain, {f.signed_tx(SensorUpdate{"1437", ScaledValue::from_double(24.5)}, "gw0")});
  REQUIRE(by_gateway.ok());
  CHECK(chain.state().sensor("1437")->last_value.str() == "24.5");
  CHECK(chain.state().sensor("1437")->updated_at == 2);
}

TEST_CASE("validation failures carry the transaction error") {
  Fixture f;
  Chain chain(f.config);
  HmacSigner signer = f.signer();

  auto expect_reject = [&](Transaction tx, TxError want) {
    Block block = chain.build_next({std::move(tx)}, "v0", 10);
    auto status = chain.append(block, f.registry, signer);
    REQUIRE(!status.ok());
    CHECK(status.code() == AppendError::InvalidTx);
    CHECK(status.detail().find(tx_error_name(want)) == 0);
    CHECK(chain.height() == 0);  // failed append leaves the chain untouched
  };

  expect_reject(f.signed_tx(SensorUpdate{"404", ScaledValue::from_double(1.0)}, "d1"),
                TxError::UnknownSensor);
  expect_reject(f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(1.0)}, "nobody"),
                TxError::Unauthorized);
  expect_reject(f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(1.0)}, "v0"),
                TxError::Unauthorized);
  expect_reject(f.signed_tx(SensorUpdate{"1437", ScaledValue::from_double(1.0)}, "d1"),
                TxError::Unauthorized);
  expect_reject(f.signed_tx(Alert{"d1", "PortScan", ScaledValue::from_double(0.9), true}, "d1"),
                TxError::Unauthorized);
  expect_reject(f.signed_tx(Alert{"404", "PortScan", ScaledValue::from_double(0.9), true}, "gw0"),
                TxError::UnknownDevice);
  expect_reject(f.signed_tx(RegisterDevice{"d2", "gw0"}, "gw0"), TxError::Unauthorized);

  Transaction forged = f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(1.0)}, "d1");
  forged.signature[0] ^= 1;
  expect_reject(forged, TxError::BadSignature);

  Transaction resigned = f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(7.0)}, "d1");
  std::get<SensorUpdate>(resigned.payload).value = ScaledValue::from_double(70.0);
  resigned.tx_id = tx_digest(resigned);  // consistent id, stale signature
  expect_reject(resigned, TxError::BadSignature);
}

TEST_CASE("alert quarantines device and blocks later updates") {
  Fixture f;
  Chain chain(f.config);

  auto alerted = f.append_txs(
      chain, {f.signed_tx(Alert{"d1", "Dos Hulk", ScaledValue::from_double(0.97), true}, "gw0")});
  REQUIRE(alerted.ok());
  CHECK(chain.state().device("d1")->status == DeviceStatus::Quarantined);
  REQUIRE(chain.state().alerts().size() == 1);
  CHECK(chain.state().alerts()[0].alert.attack_class == "Dos Hulk");
  CHECK(chain.state().alerts()[0].submitter == "gw0");
  CHECK(chain.state().alerts()[0].height == 1);

  auto rejected = f.append_txs(
      chain, {f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(12.0)}, "d1", 1)});
  REQUIRE(!rejected.ok());
  CHECK(rejected.detail().find("DeviceQuarantined") == 0);

  auto realert = f.append_txs(
      chain, {f.signed_tx(Alert{"d1", "PortScan", ScaledValue::from_double(0.8), true}, "gw0", 1)});
  REQUIRE(!realert.ok());
  CHECK(realert.detail().find("DeviceQuarantined") == 0);
}

TEST_CASE("alert without quarantine leaves device active") {
  Fixture f;
  Chain chain(f.config);

  auto alerted = f.append_txs(
      chain, {f.signed_tx(Alert{"d1", "PortScan", ScaledValue::from_double(0.6), false}, "gw0")});
  REQUIRE(alerted.ok());
  CHECK(chain.state().device("d1")->status == DeviceStatus::Active);
  CHECK(chain.state().alerts().size() == 1);

  auto update = f.append_txs(
      chain, {f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(12.0)}, "d1")});
  CHECK(update.ok());
}

TEST_CASE("admin registers devices and sensors") {
  Fixture f;
  Chain chain(f.config);

  auto registered = f.append_txs(chain, {f.signed_tx(RegisterDevice{"d2", "gw0"}, "admin"),
                                         f.signed_tx(RegisterSensor{"s2", "d2"}, "admin", 1)});
  REQUIRE(registered.ok());
  CHECK(chain.state().device("d2")->owner_member == "gw0");
  CHECK(chain.state().sensor("s2")->device_id == "d2");

  auto duplicate = f.append_txs(chain, {f.signed_tx(RegisterDevice{"d2", "gw0"}, "admin", 2)});
  REQUIRE(!duplicate.ok());
  CHECK(duplicate.detail().find("DuplicateAsset") == 0);

  auto orphan = f.append_txs(chain, {f.signed_tx(RegisterSensor{"s3", "d404"}, "admin", 3)});
  REQUIRE(!orphan.ok());
  CHECK(orphan.detail().find("UnknownDevice") == 0);
}

TEST_CASE("structural append failures") {
  Fixture f;
  Chain chain(f.config);
  HmacSigner signer = f.signer();
  Transaction tx = f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(11.0)}, "d1");

  Block wrong_height = chain.build_next({tx}, "v0", 10);
  wrong_height.height = 5;
  wrong_height.block_hash = block_digest(wrong_height);
  CHECK(chain.append(wrong_height, f.registry, signer).code() == AppendError::BadHeight);

  Block wrong_link = chain.build_next({tx}, "v0", 10);
  wrong_link.prev_hash.bytes[0] ^= 1;
  wrong_link.block_hash = block_digest(wrong_link);
  CHECK(chain.append(wrong_link, f.registry, signer).code() == AppendError::BadLink);

  Block tampered = chain.build_next({tx}, "v0", 10);
  tampered.timestamp += 1;  // content changed after hashing
  CHECK(chain.append(tampered, f.registry, signer).code() == AppendError::BadHash);

  CHECK(chain.height() == 0);
}

TEST_CASE("rolling validation within a block") {
  Fixture f;
  Chain chain(f.config);

  // Second transaction references the device registered by the first.
  auto ok = f.append_txs(chain, {f.signed_tx(RegisterDevice{"d2", "gw0"}, "admin"),
                                 f.signed_tx(RegisterSensor{"s2", "d2"}, "admin", 1),
                                 f.signed_tx(SensorUpdate{"s2", ScaledValue::from_double(3.5)},
                                             "gw0")});
  REQUIRE(ok.ok());
  CHECK(chain.state().sensor("s2")->last_value.str() == "3.5");

  // An alert earlier in the block quarantines; the later update must fail
  // and the whole block must be rejected atomically.
  auto mixed = f.append_txs(
      chain, {f.signed_tx(Alert{"d1", "Bot", ScaledValue::from_double(0.9), true}, "gw0"),
              f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(1.0)}, "d1")});
  REQUIRE(!mixed.ok());
  CHECK(chain.height() == 1);
  CHECK(chain.state().device("d1")->status == DeviceStatus::Active);
  CHECK(chain.state().alerts().empty());
}

TEST_CASE("incremental state matches replay from genesis") {
  Fixture f;
  Chain chain(f.config);

  REQUIRE(f.append_txs(chain, {f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(11.0)},
                                           "d1")})
              .ok());
  REQUIRE(f.append_txs(chain, {f.signed_tx(RegisterDevice{"d2", "gw0"}, "admin"),
                               f.signed_tx(RegisterSensor{"s2", "d2"}, "admin", 1)},
                       20)
              .ok());
  REQUIRE(f.append_txs(chain,
                       {f.signed_tx(Alert{"d2", "SSH Patator", ScaledValue::from_double(0.88),
                                          true},
                                    "gw0", 1)},
                       30)
              .ok());

  WorldState replayed = replay_state(chain);
  CHECK(replayed == chain.state());
  CHECK(replayed.digest() == chain.state().digest());
  CHECK(chain.verify().ok());
  CHECK(chain.verify_full(f.registry, f.signer()).ok());
}

TEST_CASE("world state dump is deterministic and ordered") {
  Fixture f;
  Chain chain(f.config);
  REQUIRE(f.append_txs(chain, {f.signed_tx(Alert{"d1", "Web XSS", ScaledValue::from_double(0.75),
                                                 true},
                                           "gw0")})
              .ok());

  std::ostringstream a, b;
  chain.state().dump(a);
  chain.state().dump(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("device 7609 gw0 active\n") != std::string::npos);
  CHECK(a.str().find("device d1 gw0 quarantined\n") != std::string::npos);
  // Sorted by id: device lines first, 7609 before d1.
  CHECK(a.str().find("device 7609") < a.str().find("device d1"));
}

TEST_CASE("export import round trip") {
  Fixture f;
  Chain chain(f.config);
  REQUIRE(f.append_txs(chain, {f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(11.0)},
                                           "d1")})
              .ok());
  REQUIRE(f.append_txs(chain,
                       {f.signed_tx(Alert{"d1", "FTP Patator", ScaledValue::from_double(0.93),
                                          true},
                                    "gw0")},
                       20)
              .ok());

  std::ostringstream out;
  chain.export_chain(out);

  std::istringstream in(out.str());
  auto imported = Chain::import_chain(in);
  REQUIRE(imported.ok());
  CHECK(imported.value().blocks() == chain.blocks());
  CHECK(imported.value().config() == chain.config());
  CHECK(imported.value().state() == chain.state());
  CHECK(imported.value().verify().ok());
  CHECK(imported.value().verify_full(f.registry, f.signer()).ok());

  std::ostringstream again;
  imported.value().export_chain(again);
  CHECK(again.str() == out.str());
}

TEST_CASE("import rejects malformed input") {
  for (const char* bad : {"", "config zz\n", "nonsense\n", "config 0000\n",
                          "block 0 x genesis 0 0 y\n"}) {
    std::istringstream in(bad);
    CHECK(!Chain::import_chain(in).ok());
  }

  // Valid grammar but config line swapped for a different asset set.
  Fixture f;
  Chain chain(f.config);
  std::ostringstream out;
  chain.export_chain(out);
  ChainConfig other = f.config;
  other.devices[0].owner_member = "intruder";
  std::string text = out.str();
  std::string original_hex = to_hex(encode_chain_config(f.config));
  std::string other_hex = to_hex(encode_chain_config(other));
  text.replace(text.find(original_hex), original_hex.size(), other_hex);
  std::istringstream in(text);
  auto imported = Chain::import_chain(in);
  REQUIRE(!imported.ok());
  CHECK(imported.code() == ImportError::Mismatch);
}

TEST_CASE("every single byte substitution in an export is detected") {
  Fixture f;
  Chain chain(f.config);
  REQUIRE(f.append_txs(chain, {f.signed_tx(SensorUpdate{"1", ScaledValue::from_double(11.0)},
                                           "d1")})
              .ok());
  REQUIRE(f.append_txs(chain,
                       {f.signed_tx(Alert{"d1", "Heartbleed", ScaledValue::from_double(0.99),
                                          true},
                                    "gw0"),
                        f.signed_tx(SensorUpdate{"1437", ScaledValue::from_double(2.25)}, "gw0",
                                    1)},
                       20)
              .ok());

  std::ostringstream out;
  chain.export_chain(out);
  const std::string clean = out.str();

  Rng rng(4242);
  int detected = 0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    std::string corrupted = clean;
    std::size_t pos = rng.below(corrupted.size());
    char replacement;
    do {
      replacement = static_cast<char>(rng.below(256));
    } while (replacement == corrupted[pos]);
    corrupted[pos] = replacement;

    std::istringstream in(corrupted);
    auto imported = Chain::import_chain(in);
    if (!imported.ok() || !imported.value().verify().ok() ||
        imported.value().blocks() != chain.blocks()) {
      ++detected;
    }
  }
  CHECK(detected == trials);
}

}  // TEST_SUITE
