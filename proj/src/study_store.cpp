#include "boss/study_store.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <signal.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace boss::store {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config <-> JSON

namespace {

std::string_view noise_name(nn::NoiseKind k) { return k == nn::NoiseKind::symmetric ? "symmetric" : "asymmetric"; }

std::string_view distill_name(nn::DistillLoss k) { return k == nn::DistillLoss::mse_logit ? "mse-logit" : "kl-divergence"; }

template <typename T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("study config missing key '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

json config_to_json(const BossConfig& c) {
  json space = json::array();
  for (const auto& p : c.space.params())
    space.push_back({{"name", p.name}, {"kind", std::string(to_string(p.kind))}, {"low", p.low}, {"high", p.high}});
  json dataset = {{"generator", c.dataset.generator == DataGenerator::blobs ? "blobs" : "file"},
                  {"n_train", c.dataset.n_train},
                  {"n_val", c.dataset.n_val},
                  {"d", c.dataset.dimension},
                  {"classes", c.dataset.n_classes},
                  {"separation", c.dataset.separation},
                  {"noise", c.dataset.noise ? std::string(noise_name(*c.dataset.noise)) : std::string("none")},
                  {"noise_ratio", c.dataset.noise_ratio},
                  {"seed", c.dataset.seed},
                  {"train_path", c.dataset.train_path},
                  {"val_path", c.dataset.val_path}};
  return {{"space", space},
          {"boss",
           {{"n_total", c.n_total},
            {"n_warmup", c.n_warmup},
            {"k_candidates", c.k_candidates},
            {"parallelism", c.parallelism},
            {"alpha", c.distill.alpha},
            {"distill", std::string(distill_name(c.distill.loss))},
            {"temperature", c.distill.temperature}}},
          {"tpe",
           {{"gamma", c.tpe.gamma},
            {"n_ei_candidates", c.tpe.n_ei_candidates},
            {"n_startup", c.tpe.n_startup},
            {"bandwidth_floor", c.tpe.bandwidth_floor},
            {"prior_weight", c.tpe.prior_weight}}},
          {"trainer",
           {{"epochs", c.trainer.epochs},
            {"hidden", c.trainer.hidden},
            {"default_lr", c.trainer.defaults.learning_rate},
            {"default_momentum", c.trainer.defaults.momentum},
            {"default_weight_decay", c.trainer.defaults.weight_decay},
            {"default_batch", c.trainer.defaults.batch_size}}},
          {"dataset", dataset},
          {"baseline", c.baseline},
          {"master_seed", c.master_seed}};
}

BossConfig config_from_json(const json& j) {
  BossConfig c;
  std::vector<ParamSpec> params;
  for (const auto& p : get<json>(j, "space")) {
    auto kind = parse_param_kind(get<std::string>(p, "kind"));
    if (!kind) throw Error("study config: unknown parameter kind");
    params.push_back({get<std::string>(p, "name"), *kind, get<double>(p, "low"), get<double>(p, "high")});
  }
  c.space = SearchSpace(std::move(params));
  const json& b = j.at("boss");
  c.n_total = get<int>(b, "n_total");
  c.n_warmup = get<int>(b, "n_warmup");
  c.k_candidates = get<int>(b, "k_candidates");
  c.parallelism = get<int>(b, "parallelism");
  c.distill.alpha = get<double>(b, "alpha");
  c.distill.loss = get<std::string>(b, "distill") == "kl-divergence" ? nn::DistillLoss::kl_divergence
                                                                      : nn::DistillLoss::mse_logit;
  c.distill.temperature = get<double>(b, "temperature");
  const json& t = j.at("tpe");
  c.tpe.gamma = get<double>(t, "gamma");
  c.tpe.n_ei_candidates = get<int>(t, "n_ei_candidates");
  c.tpe.n_startup = get<int>(t, "n_startup");
  c.tpe.bandwidth_floor = get<double>(t, "bandwidth_floor");
  c.tpe.prior_weight = get<double>(t, "prior_weight");
  const json& tr = j.at("trainer");
  c.trainer.epochs = get<int>(tr, "epochs");
  c.trainer.hidden = get<std::size_t>(tr, "hidden");
  c.trainer.defaults.learning_rate = get<double>(tr, "default_lr");
  c.trainer.defaults.momentum = get<double>(tr, "default_momentum");
  c.trainer.defaults.weight_decay = get<double>(tr, "default_weight_decay");
  c.trainer.defaults.batch_size = get<std::size_t>(tr, "default_batch");
  const json& d = j.at("dataset");
  c.dataset.generator = get<std::string>(d, "generator") == "file" ? DataGenerator::file : DataGenerator::blobs;
  c.dataset.n_train = get<std::size_t>(d, "n_train");
  c.dataset.n_val = get<std::size_t>(d, "n_val");
  c.dataset.dimension = get<std::size_t>(d, "d");
  c.dataset.n_classes = get<int>(d, "classes");
  c.dataset.separation = get<double>(d, "separation");
  auto noise = get<std::string>(d, "noise");
  if (noise == "symmetric") c.dataset.noise = nn::NoiseKind::symmetric;
  else if (noise == "asymmetric") c.dataset.noise = nn::NoiseKind::asymmetric;
  else c.dataset.noise.reset();
  c.dataset.noise_ratio = get<double>(d, "noise_ratio");
  c.dataset.seed = get<std::uint64_t>(d, "seed");
  c.dataset.train_path = get<std::string>(d, "train_path");
  c.dataset.val_path = get<std::string>(d, "val_path");
  c.baseline = get<std::map<std::string, double>>(j, "baseline");
  c.master_seed = get<std::uint64_t>(j, "master_seed");
  return c;
}

std::string config_digest(const BossConfig& config) {
  const std::string text = config_to_json(config).dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

// ---------------------------------------------------------------------------
// Trial records

json record_to_json(const TrialRecord& r) {
  json params = json::object();
  for (std::size_t i = 0; i < r.params.size(); ++i) params[r.params.names()[i]] = r.params.values()[i];
  json cands = json::array();
  for (const auto& c : r.candidates) cands.push_back({{"u", c.point}, {"score", c.score}});
  json j = {{"trial_id", r.trial_id},
            {"phase", std::string(to_string(r.phase))},
            {"params", params},
            {"objective", r.failed ? json(nullptr) : json(r.objective)},
            {"status", r.failed ? "failed" : "ok"},
            {"source", r.source},
            {"obs_set", r.obs_set},
            {"snapshot", r.snapshot_ids},
            {"candidates", cands},
            {"chosen", r.chosen}};
  if (r.failed) j["failure"] = r.failure;
  if (r.teacher_id) j["teacher_id"] = *r.teacher_id;
  if (r.student_init_id) j["student_init_id"] = *r.student_init_id;
  if (r.degenerate_init) j["degenerate_init"] = true;
  if (!r.topk_ids.empty()) j["topk"] = r.topk_ids;
  return j;
}

TrialRecord record_from_json(const json& j, const SearchSpace& space) {
  TrialRecord r;
  r.trial_id = get<std::int64_t>(j, "trial_id");
  auto phase = parse_phase(get<std::string>(j, "phase"));
  if (!phase) throw Error("unknown phase");
  r.phase = *phase;
  const json& p = j.at("params");
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& spec : space.params()) {
    names.push_back(spec.name);
    values.push_back(get<double>(p, spec.name.c_str()));
  }
  r.params = ParamVector(std::move(names), std::move(values));
  r.failed = get<std::string>(j, "status") == "failed";
  r.objective = r.failed ? tpe::failed_objective : get<double>(j, "objective");
  if (r.failed) r.failure = j.value("failure", "");
  r.source = get<std::string>(j, "source");
  r.obs_set = get<std::string>(j, "obs_set");
  r.snapshot_ids = get<std::vector<std::int64_t>>(j, "snapshot");
  for (const auto& c : j.at("candidates")) r.candidates.push_back({get<UnitVector>(c, "u"), get<double>(c, "score")});
  r.chosen = get<std::size_t>(j, "chosen");
  if (j.contains("teacher_id")) r.teacher_id = j.at("teacher_id").get<std::int64_t>();
  if (j.contains("student_init_id")) r.student_init_id = j.at("student_init_id").get<std::int64_t>();
  r.degenerate_init = j.value("degenerate_init", false);
  if (j.contains("topk")) r.topk_ids = j.at("topk").get<std::vector<std::int64_t>>();
  return r;
}

std::string record_line(const TrialRecord& r) { return record_to_json(r).dump() + "\n"; }

json event_to_json(const TrialEvent& ev) {
  json j = {{"seq", ev.seq},
            {"event", ev.kind == TrialEvent::Kind::started ? "started" : "finished"},
            {"trial_id", ev.trial_id},
            {"phase", std::string(to_string(ev.phase))},
            {"running", ev.running}};
  json params = json::object();
  for (std::size_t i = 0; i < ev.params.size(); ++i) params[ev.params.names()[i]] = ev.params.values()[i];
  j["params"] = params;
  if (ev.record) j["record"] = record_to_json(*ev.record);
  return j;
}

// ---------------------------------------------------------------------------
// Files

namespace {

void write_atomically(const fs::path& file, const std::string& bytes) {
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, file, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_all(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos, const fs::path& file) {
  if (pos + sizeof(T) > in.size()) throw Error(file.string() + ": truncated checkpoint at byte " + std::to_string(pos));
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

fs::path ckpt_path(const fs::path& dir, std::int64_t id) { return dir / "ckpt" / (std::to_string(id) + ".bin"); }

}  // namespace

void write_checkpoint(const fs::path& file, const nn::MlpParams& params) {
  const auto& s = params.shape();
  std::string bytes;
  put_le<std::int32_t>(bytes, 2);
  put_le<std::int32_t>(bytes, static_cast<std::int32_t>(s.hidden));
  put_le<std::int32_t>(bytes, static_cast<std::int32_t>(s.input));
  put_le<std::int32_t>(bytes, static_cast<std::int32_t>(s.classes));
  put_le<std::int32_t>(bytes, static_cast<std::int32_t>(s.hidden));
  for (double v : params.data()) put_le<double>(bytes, v);
  write_atomically(file, bytes);
}

nn::MlpParams read_checkpoint(const fs::path& file) {
  const std::string bytes = read_all(file);
  std::size_t pos = 0;
  auto layers = get_le<std::int32_t>(bytes, pos, file);
  if (layers != 2) throw Error(file.string() + ": expected 2 layers, found " + std::to_string(layers));
  auto h = get_le<std::int32_t>(bytes, pos, file);
  auto d = get_le<std::int32_t>(bytes, pos, file);
  auto c = get_le<std::int32_t>(bytes, pos, file);
  auto h2 = get_le<std::int32_t>(bytes, pos, file);
  if (h <= 0 || d <= 0 || c <= 0 || h2 != h) throw Error(file.string() + ": inconsistent layer dims");
  nn::MlpShape shape{static_cast<std::size_t>(d), static_cast<std::size_t>(h), static_cast<std::size_t>(c)};
  std::vector<double> data(shape.parameter_count());
  for (auto& v : data) v = get_le<double>(bytes, pos, file);
  if (pos != bytes.size()) throw Error(file.string() + ": trailing bytes after parameters");
  return nn::MlpParams(shape, std::move(data));
}

void save(const StudyState& state, const fs::path& dir) {
  fs::create_directories(dir / "ckpt");
  const fs::path log = dir / "trials.log";
  std::string existing = fs::exists(log) ? read_all(log) : std::string();
  std::string suffix;
  std::size_t offset = 0;
  for (const auto& rec : state.trial_log) {
    std::string line = record_line(rec);
    if (offset < existing.size()) {
      if (existing.compare(offset, line.size(), line) != 0)
        throw Error("save: " + log.string() + " diverges from the study at byte " + std::to_string(offset));
    } else {
      // Checkpoints land before their log line, so a logged trial always has one.
      if (!rec.failed) {
        const Checkpoint* c = state.registry.find(rec.trial_id);
        if (!c) throw Error("save: no checkpoint for trial " + std::to_string(rec.trial_id));
        write_checkpoint(ckpt_path(dir, rec.trial_id), c->params);
      }
      suffix += line;
    }
    offset += line.size();
  }
  if (offset < existing.size()) throw Error("save: " + log.string() + " holds more trials than the study");
  if (!suffix.empty() || !fs::exists(log)) {
    std::ofstream out(log, std::ios::binary | std::ios::app);
    out.write(suffix.data(), static_cast<std::streamsize>(suffix.size()));
    out.flush();
    if (!out) throw Error("cannot append to " + log.string());
  }

  json meta = {{"format", "boss-study"},
               {"format_version", format_version},
               {"method", std::string(to_string(state.method))},
               {"config_digest", config_digest(state.config)},
               {"config", config_to_json(state.config)},
               {"rng_cursor",
                {{"scheme", "splitmix64 per-trial streams"},
                 {"master_seed", state.config.master_seed},
                 {"next_trial_id", state.next_trial_id}}},
               {"trials_logged", state.trial_log.size()},
               {"complete", state.complete}};
  write_atomically(dir / "study.meta", meta.dump(2) + "\n");
}

StudyState load(const fs::path& dir) {
  const fs::path meta_file = dir / "study.meta";
  if (!fs::exists(meta_file)) throw Error("no study at " + dir.string() + " (missing study.meta)");
  json meta;
  try {
    meta = json::parse(read_all(meta_file));
  } catch (const json::exception& e) {
    throw Error(meta_file.string() + ": malformed: " + e.what());
  }
  if (meta.value("format", "") != "boss-study") throw Error(meta_file.string() + ": not a study file");
  if (meta.value("format_version", -1) != format_version)
    throw Error(meta_file.string() + ": unsupported format version " + meta.value("format_version", json(-1)).dump());
  auto method = parse_method(meta.value("method", ""));
  if (!method) throw Error(meta_file.string() + ": unknown method");
  BossConfig config;
  try {
    config = config_from_json(meta.at("config"));
  } catch (const json::exception& e) {
    throw Error(meta_file.string() + ": bad config record: " + e.what());
  }
  const std::string digest = config_digest(config);
  if (meta.value("config_digest", "") != digest)
    throw Error(meta_file.string() + ": config digest mismatch (config edited or file corrupted)");

  StudyState state = StudyState::fresh(config, *method);
  const fs::path log = dir / "trials.log";
  const std::string text = fs::exists(log) ? read_all(log) : std::string();
  std::size_t pos = 0;
  std::set<std::int64_t> checkpointed;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos)
      throw Error(log.string() + ": truncated record at byte offset " + std::to_string(pos));
    TrialRecord rec;
    try {
      rec = record_from_json(json::parse(text.substr(pos, nl - pos)), config.space);
    } catch (const std::exception& e) {
      throw Error(log.string() + ": malformed record at byte offset " + std::to_string(pos) + ": " + e.what());
    }
    for (auto ref : {rec.teacher_id, rec.student_init_id})
      if (ref && !checkpointed.count(*ref))
        throw Error(log.string() + ": record at byte offset " + std::to_string(pos) + " references trial " +
                    std::to_string(*ref) + " with no earlier checkpoint");
    std::optional<nn::MlpParams> params;
    if (!rec.failed) {
      auto file = ckpt_path(dir, rec.trial_id);
      if (!fs::exists(file)) throw Error("missing checkpoint " + file.string());
      params = read_checkpoint(file);
      checkpointed.insert(rec.trial_id);
    }
    state.apply(std::move(rec), std::move(params));
    pos = nl + 1;
  }
  const auto& cursor = meta.at("rng_cursor");
  if (cursor.value("master_seed", std::uint64_t{0}) != config.master_seed)
    throw Error(meta_file.string() + ": rng cursor seed does not match the config");
  state.complete = meta.value("complete", false) && state.trial_log.size() == meta.value("trials_logged", std::size_t{0});
  return state;
}

// ---------------------------------------------------------------------------

EventLog::EventLog(const fs::path& dir) : file_(dir / "events.log") {
  fs::create_directories(dir);
  if (fs::exists(file_)) {
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ++count_;
  }
}

void EventLog::append(const TrialEvent& ev) {
  std::ofstream out(file_, std::ios::app);
  out << event_to_json(ev).dump() << '\n';
  if (!out) throw Error("cannot append to " + file_.string());
  ++count_;
}

StudyLock::StudyLock(const fs::path& dir) : file_(dir / ".lock") {
  fs::create_directories(dir);
  for (int attempt = 0; attempt < 2; ++attempt) {
    int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      std::string pid = std::to_string(::getpid()) + "\n";
      [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    if (errno != EEXIST) throw Error("cannot create lock " + file_.string() + ": " + std::strerror(errno));
    long owner = 0;
    {
      std::ifstream in(file_);
      in >> owner;
    }
    if (owner > 0 && ::kill(static_cast<pid_t>(owner), 0) == 0)
      throw Error("study " + dir.string() + " is locked by running process " + std::to_string(owner));
    fs::remove(file_);
  }
  throw Error("cannot acquire lock " + file_.string());
}

StudyLock::~StudyLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

}  // namespace boss::store
