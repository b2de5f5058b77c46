#include "opencon/trainer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "opencon/core/error.hpp"

namespace opencon::trainer {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'O', 'C', 'K', 'P'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    bytes_.append(buf, sizeof(T));
  }
  void put_reals(std::span<const double> v) {
    for (double x : v) put(x);
  }
  void put_text(const std::string& s) {
    put(static_cast<std::uint64_t>(s.size()));
    bytes_.append(s);
  }
  void raw(const char* p, std::size_t n) { bytes_.append(p, n); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_reals(std::span<double> out) {
    for (double& x : out) x = get<double>();
  }
  std::string get_text() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) fail(ErrorCode::Corrupt, "checkpoint is truncated");
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

void put_mlp(Writer& w, const encoder::Mlp& m) {
  w.put_reals(m.w1.storage());
  w.put_reals(m.b1);
  w.put_reals(m.w2.storage());
  w.put_reals(m.b2);
}

void get_mlp(Reader& r, encoder::Mlp& m) {
  r.get_reals(m.w1.storage());
  r.get_reals(m.b1);
  r.get_reals(m.w2.storage());
  r.get_reals(m.b2);
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& state) {
  Writer w;
  w.raw(kMagic, 4);
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(state.mlp.input_dim()));
  w.put(static_cast<std::uint32_t>(state.mlp.hidden_dim()));
  w.put(static_cast<std::uint32_t>(state.mlp.output_dim()));
  w.put(static_cast<std::uint32_t>(state.store.num_classes()));
  w.put(static_cast<std::uint32_t>(state.store.known_ids.size()));
  w.put(static_cast<std::uint64_t>(state.next_epoch));
  put_mlp(w, state.mlp);
  put_mlp(w, state.velocity);
  w.put_reals(state.store.means.storage());
  for (auto c : state.store.assignment_counts) w.put(static_cast<std::uint64_t>(c));
  w.put(state.data_rng.seed());
  w.put_text(state.data_rng.save_state());
  w.put(state.augment_rng.seed());
  w.put_text(state.augment_rng.save_state());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write checkpoint '" + path + "'");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) fail(ErrorCode::IoError, "failed writing checkpoint '" + path + "'");
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open checkpoint '" + path + "'");
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));

  if (r.raw(4) != std::string(kMagic, 4)) fail(ErrorCode::Corrupt, "not an OCKP checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) + " is not supported");
  }
  const auto m = r.get<std::uint32_t>(), h = r.get<std::uint32_t>(), d = r.get<std::uint32_t>();
  const auto k = r.get<std::uint32_t>(), known = r.get<std::uint32_t>();
  if (known > k || m == 0 || h == 0 || d == 0) fail(ErrorCode::Corrupt, "checkpoint header is inconsistent");

  TrainState s;
  s.next_epoch = r.get<std::uint64_t>();
  s.mlp = encoder::make_mlp(m, h, d);
  s.velocity = encoder::make_mlp(m, h, d);
  get_mlp(r, s.mlp);
  get_mlp(r, s.velocity);
  s.store.means = Matrix(k, d);
  r.get_reals(s.store.means.storage());
  s.store.assignment_counts.resize(k);
  for (auto& c : s.store.assignment_counts) c = static_cast<std::size_t>(r.get<std::uint64_t>());
  for (std::uint32_t c = 0; c < k; ++c) (c < known ? s.store.known_ids : s.store.novel_ids).push_back(c);

  const auto data_seed = r.get<std::uint64_t>();
  s.data_rng = Rng(data_seed, Stream::Data);
  s.data_rng.load_state(r.get_text());
  const auto aug_seed = r.get<std::uint64_t>();
  s.augment_rng = Rng(aug_seed, Stream::Augment);
  s.augment_rng.load_state(r.get_text());
  if (!r.at_end()) fail(ErrorCode::Corrupt, "trailing bytes after checkpoint payload");
  return s;
}

void check_compatible(const TrainState& state, const TrainConfig& config, const data::SplitDataset& split) {
  const std::size_t h = config.hidden_dim > 0 ? config.hidden_dim : 2 * split.dim;
  const std::size_t k = config.num_prototypes > 0 ? config.num_prototypes : split.num_classes();
  if (state.mlp.input_dim() != split.dim || state.mlp.hidden_dim() != h || state.mlp.output_dim() != config.embed_dim ||
      state.store.num_classes() != k || state.store.known_ids.size() != split.num_known()) {
    fail(ErrorCode::ShapeMismatch, "checkpoint shapes do not match the configuration");
  }
  if (state.next_epoch > config.epochs) fail(ErrorCode::ShapeMismatch, "checkpoint is past the epoch budget");
}

}  // namespace opencon::trainer
