#include "qadaa/artifact.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "qadaa/error.hpp"
#include "qadaa/hash.hpp"

namespace qadaa::app {

using nlohmann::json;
using numkit::Matrix;
using pipeline::ModelKind;
using pipeline::Predictor;
using pipeline::Representation;

namespace {

constexpr std::size_t kChecksumSize = 64;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_uint(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

struct TensorWriter {
  json index = json::array();
  std::string blob;

  void add(const std::string& name, const Matrix& m) {
    index.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    for (double v : m.values()) put_u64(blob, std::bit_cast<std::uint64_t>(v));
  }
};

struct TensorReader {
  std::map<std::string, Matrix> tensors;

  Matrix take(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) data_error("artifact: missing tensor '" + name + "'");
    Matrix m = std::move(it->second);
    tensors.erase(it);
    return m;
  }

  Matrix take(const std::string& name, std::size_t rows, std::size_t cols) {
    Matrix m = take(name);
    if (m.rows() != rows || m.cols() != cols) {
      data_error("artifact: tensor '" + name + "' has shape " + std::to_string(m.rows()) + "x" +
                 std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                 std::to_string(cols));
    }
    return m;
  }
};

json vocab_json(const features::Vocabulary& v) {
  return {{"tokens", v.tokens()}, {"df", v.dfs()}, {"n_docs", v.n_docs()}};
}

features::Vocabulary parse_vocab(const json& j) {
  return features::Vocabulary(j.at("tokens").get<std::vector<std::string>>(),
                              j.at("df").get<std::vector<std::size_t>>(),
                              j.at("n_docs").get<std::size_t>());
}

json catalog_json(const corpus::LabelCatalog& c) {
  json classes = json::array();
  for (const auto& l : c.classes()) classes.push_back({{"name", l.name}, {"gloss", l.gloss}});
  return classes;
}

void write_classical(const Predictor& p, json& h, TensorWriter& w) {
  const auto& ovr = p.ovr;
  json m{{"family", ovr.family == classical::Family::svm ? "svm" : "logreg"},
         {"n_classes", ovr.n_classes},
         {"classes", p.classes}};
  if (ovr.family == classical::Family::svm) {
    json svms = json::array();
    for (std::size_t k = 0; k < ovr.svms.size(); ++k) {
      const auto& s = ovr.svms[k];
      svms.push_back({{"kernel", s.spec.kind == classical::KernelKind::linear ? "linear" : "rbf"},
                      {"C", s.spec.c},
                      {"gamma", s.spec.gamma},
                      {"support_indices", s.support_indices},
                      {"labels", s.labels},
                      {"converged", s.converged},
                      {"iterations", s.iterations}});
      const std::string prefix = "svm." + std::to_string(k);
      w.add(prefix + ".alphas", Matrix(1, s.alphas.size(), s.alphas));
      w.add(prefix + ".bias", Matrix(1, 1, s.bias));
      const std::size_t dim = s.support_vectors.empty() ? 0 : s.support_vectors.front().size();
      Matrix sv(s.support_vectors.size(), dim);
      for (std::size_t i = 0; i < s.support_vectors.size(); ++i) {
        std::copy(s.support_vectors[i].begin(), s.support_vectors[i].end(), sv.row(i).begin());
      }
      w.add(prefix + ".support_vectors", sv);
    }
    m["svms"] = svms;
  } else {
    for (std::size_t k = 0; k < ovr.binary_logregs.size(); ++k) {
      const auto& lr = ovr.binary_logregs[k];
      const std::string prefix = "logreg." + std::to_string(k);
      w.add(prefix + ".weights", lr.weights);
      w.add(prefix + ".bias", lr.bias);
      w.add(prefix + ".l2", Matrix(1, 1, lr.l2));
    }
  }
  h["model_params"] = m;
}

std::size_t feature_dim(const Predictor& p) {
  if (p.representation == Representation::tfidf) return p.tfidf.dim();
  return p.embeddings.store ? p.embeddings.store->dim() : 0;
}

void read_classical(Predictor& p, const json& h, TensorReader& r, std::size_t dim) {
  const json& m = h.at("model_params");
  const std::string family = m.at("family").get<std::string>();
  if (family != "svm" && family != "logreg") data_error("artifact: unknown model family '" + family + "'");
  auto& ovr = p.ovr;
  ovr.family = family == "svm" ? classical::Family::svm : classical::Family::logreg;
  if ((ovr.family == classical::Family::svm) != (p.model == ModelKind::svm)) {
    data_error("artifact: model family does not match the model kind");
  }
  ovr.n_classes = m.at("n_classes").get<std::size_t>();
  p.classes = m.at("classes").get<std::vector<std::size_t>>();
  if (ovr.n_classes < 2 || p.classes.size() != ovr.n_classes) {
    data_error("artifact: class list does not match the one-vs-rest model");
  }
  for (std::size_t i = 0; i < p.classes.size(); ++i) {
    if (p.classes[i] >= p.catalog.size() || (i > 0 && p.classes[i] <= p.classes[i - 1])) {
      data_error("artifact: trained classes must be increasing catalog indices");
    }
  }
  if (ovr.family == classical::Family::svm) {
    const json& svms = m.at("svms");
    if (svms.size() != ovr.n_classes) data_error("artifact: expected one SVM per class");
    for (std::size_t k = 0; k < svms.size(); ++k) {
      const json& s = svms[k];
      classical::SvmBinaryModel b;
      const std::string kernel = s.at("kernel").get<std::string>();
      if (kernel != "linear" && kernel != "rbf") data_error("artifact: unknown kernel '" + kernel + "'");
      b.spec.kind = kernel == "linear" ? classical::KernelKind::linear : classical::KernelKind::rbf;
      b.spec.c = s.at("C").get<double>();
      b.spec.gamma = s.at("gamma").get<double>();
      b.support_indices = s.at("support_indices").get<std::vector<std::size_t>>();
      b.labels = s.at("labels").get<std::vector<int>>();
      b.converged = s.at("converged").get<bool>();
      b.iterations = s.at("iterations").get<std::size_t>();
      const std::size_t n = b.support_indices.size();
      if (b.labels.size() != n) data_error("artifact: SVM label count differs from support count");
      const std::string prefix = "svm." + std::to_string(k);
      b.alphas = r.take(prefix + ".alphas", 1, n).storage();
      b.bias = r.take(prefix + ".bias", 1, 1)(0, 0);
      const Matrix sv = r.take(prefix + ".support_vectors", n, n ? dim : 0);
      for (std::size_t i = 0; i < n; ++i) b.support_vectors.emplace_back(sv.row(i).begin(), sv.row(i).end());
      ovr.svms.push_back(std::move(b));
    }
  } else {
    for (std::size_t k = 0; k < ovr.n_classes; ++k) {
      const std::string prefix = "logreg." + std::to_string(k);
      classical::LogRegModel lr;
      lr.weights = r.take(prefix + ".weights", 2, dim);
      lr.bias = r.take(prefix + ".bias", 2, 1);
      lr.l2 = r.take(prefix + ".l2", 1, 1)(0, 0);
      ovr.binary_logregs.push_back(std::move(lr));
    }
  }
}

void read_neural(Predictor& p, const json& h, TensorReader& r) {
  const json& m = h.at("model_params");
  neural::ArchSpec arch = pipeline::parse_arch(m.at("arch"), neural::ArchSpec{});
  if (arch.head != p.head()) data_error("artifact: output head does not match the task");
  if (arch.n_classes != p.catalog.size()) data_error("artifact: output size differs from the catalog");
  p.seq.arch = arch;
  const std::size_t v = p.vocab.sequence_size();
  const std::size_t e = arch.embed_dim;
  const std::size_t hu = arch.lstm_units;
  auto& ps = p.seq.params;
  ps.embedding = r.take("embedding", v, e);
  ps.fwd = {r.take("fwd.wx", 4 * hu, e), r.take("fwd.wh", 4 * hu, hu), r.take("fwd.b", 4 * hu, 1)};
  if (arch.bidirectional) {
    ps.bwd = {r.take("bwd.wx", 4 * hu, e), r.take("bwd.wh", 4 * hu, hu), r.take("bwd.b", 4 * hu, 1)};
  }
  ps.dense_w = r.take("dense.w", arch.dense_units, arch.readout_dim());
  ps.dense_b = r.take("dense.b", arch.dense_units, 1);
  ps.head_w = r.take("head.w", arch.n_classes, arch.dense_units);
  ps.head_b = r.take("head.b", arch.n_classes, 1);
}

std::filesystem::path resolve_embeddings(const json& f, const LoadOptions& options) {
  if (!options.embeddings.empty()) return options.embeddings;
  std::filesystem::path path(f.at("path").get<std::string>());
  if (path.empty()) fail(ErrorCode::not_found, "artifact: no embedding path recorded");
  if (path.is_relative() && !std::filesystem::exists(path)) path = options.base_dir / path;
  return path;
}

Predictor read_header(const json& h, TensorReader& r, const LoadOptions& options) {
  Predictor p;
  p.task = corpus::parse_task(h.at("task").get<std::string>());
  p.case_type = corpus::parse_case_type(h.at("case_type").get<std::string>());
  p.model = pipeline::parse_model_kind(h.at("model").get<std::string>());
  p.representation = pipeline::parse_representation(h.at("representation").get<std::string>());
  p.seed = h.at("seed").get<std::uint64_t>();
  artext::from_json(h.at("preprocess"), p.preprocess);
  std::vector<corpus::ClassLabel> classes;
  for (const auto& c : h.at("catalog")) {
    classes.push_back({c.at("name").get<std::string>(), c.at("gloss").get<std::string>()});
  }
  p.catalog = corpus::LabelCatalog(p.task, p.case_type, std::move(classes));
  p.hyper = h.at("hyper");

  const json& f = h.at("featurizer");
  const std::string kind = f.at("kind").get<std::string>();
  if (p.neural()) {
    if (kind != "sequence") data_error("artifact: neural model needs a sequence featurizer");
    p.vocab = parse_vocab(f.at("vocabulary"));
    read_neural(p, h, r);
    return p;
  }
  if (p.representation == Representation::tfidf) {
    if (kind != "tfidf") data_error("artifact: expected a tfidf featurizer");
    features::TfidfOptions o;
    const json& oj = f.at("options");
    o.min_df = oj.at("min_df").get<std::size_t>();
    o.smooth_idf = oj.at("smooth_idf").get<bool>();
    o.l2_normalize = oj.at("l2_normalize").get<bool>();
    p.tfidf = features::TfidfVectorizer(parse_vocab(f.at("vocabulary")), o);
  } else {
    if (kind != "average_embedding") data_error("artifact: expected an average_embedding featurizer");
    const auto path = resolve_embeddings(f, options);
    if (!std::filesystem::exists(path)) {
      fail(ErrorCode::not_found, "artifact: embedding file not found: " + path.string());
    }
    const std::string expected = f.at("sha256").get<std::string>();
    const std::string actual = file_sha256(path);
    if (actual != expected) {
      data_error("artifact: embedding file " + path.string() + " has sha256 " + actual +
                 ", artifact expects " + expected);
    }
    auto store = std::make_shared<const features::EmbeddingStore>(features::load_embeddings(path));
    if (store->dim() != f.at("dim").get<std::size_t>()) data_error("artifact: embedding dimension changed");
    p.embeddings = {std::move(store), f.at("path").get<std::string>(), expected};
  }
  read_classical(p, h, r, feature_dim(p));
  return p;
}

}  // namespace

std::string serialize_artifact(const Predictor& p) {
  json h;
  h["toolkit_version"] = QADAA_VERSION;
  h["task"] = corpus::to_string(p.task);
  h["case_type"] = corpus::to_string(p.case_type);
  h["model"] = pipeline::to_string(p.model);
  h["representation"] = pipeline::to_string(p.representation);
  h["seed"] = p.seed;
  artext::to_json(h["preprocess"], p.preprocess);
  h["catalog"] = catalog_json(p.catalog);
  h["hyper"] = p.hyper;

  TensorWriter w;
  if (p.neural()) {
    h["featurizer"] = {{"kind", "sequence"}, {"vocabulary", vocab_json(p.vocab)}};
    h["model_params"] = {{"arch", pipeline::arch_json(p.seq.arch)}};
    const auto names = neural::SeqParams::names(p.seq.arch.bidirectional);
    const auto& ps = p.seq.params;
    std::vector<const Matrix*> tensors{&ps.embedding, &ps.fwd.wx, &ps.fwd.wh, &ps.fwd.b};
    if (p.seq.arch.bidirectional) tensors.insert(tensors.end(), {&ps.bwd.wx, &ps.bwd.wh, &ps.bwd.b});
    tensors.insert(tensors.end(), {&ps.dense_w, &ps.dense_b, &ps.head_w, &ps.head_b});
    for (std::size_t i = 0; i < names.size(); ++i) w.add(names[i], *tensors[i]);
  } else {
    if (p.representation == Representation::tfidf) {
      if (!p.tfidf.fitted()) usage_error("artifact: tfidf vectorizer is not fitted");
      const auto& o = p.tfidf.options();
      h["featurizer"] = {{"kind", "tfidf"},
                         {"vocabulary", vocab_json(p.tfidf.vocabulary())},
                         {"options", {{"min_df", o.min_df},
                                      {"smooth_idf", o.smooth_idf},
                                      {"l2_normalize", o.l2_normalize}}}};
    } else {
      if (!p.embeddings.store || p.embeddings.sha256.empty()) {
        usage_error("artifact: word2vec model without a hashed embedding file");
      }
      h["featurizer"] = {{"kind", "average_embedding"},
                         {"path", p.embeddings.path},
                         {"sha256", p.embeddings.sha256},
                         {"dim", p.embeddings.store->dim()}};
    }
    write_classical(p, h, w);
  }
  h["tensors"] = w.index;

  const std::string header = h.dump();
  std::string out(kArtifactMagic);
  put_u32(out, kArtifactVersion);
  put_u64(out, header.size());
  out += header;
  put_u64(out, w.blob.size());
  out += w.blob;
  out += sha256_hex(out);
  return out;
}

Predictor parse_artifact(std::string_view bytes, const LoadOptions& options, ArtifactInfo* info) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != kArtifactMagic) {
    data_error("artifact: bad magic (expected \"ALJP\"); not a model artifact");
  }
  if (bytes.size() < 8) data_error("artifact: truncated before the format version");
  const auto version = static_cast<std::uint32_t>(get_uint(bytes, 4, 4));
  if (version != kArtifactVersion) {
    data_error("artifact: unsupported format version " + std::to_string(version) +
               " (this build reads version " + std::to_string(kArtifactVersion) + ")");
  }
  std::size_t pos = 8;
  auto need = [&](std::uint64_t n, const char* what) {
    if (n > bytes.size() || pos > bytes.size() - n) data_error(std::string("artifact: truncated in ") + what);
  };
  need(8, "header length");
  const std::uint64_t header_len = get_uint(bytes, pos, 8);
  pos += 8;
  need(header_len, "header");
  const std::string_view header = bytes.substr(pos, header_len);
  pos += header_len;
  need(8, "blob length");
  const std::uint64_t blob_len = get_uint(bytes, pos, 8);
  pos += 8;
  need(blob_len, "tensor data");
  const std::string_view blob = bytes.substr(pos, blob_len);
  pos += blob_len;
  need(kChecksumSize, "checksum");
  if (bytes.size() != pos + kChecksumSize) data_error("artifact: trailing bytes after the checksum");
  if (sha256_hex(bytes.substr(0, pos)) != bytes.substr(pos)) data_error("artifact: checksum mismatch");

  try {
    const json h = json::parse(header);
    TensorReader r;
    std::size_t offset = 0;
    for (const auto& t : h.at("tensors")) {
      const auto rows = t.at("rows").get<std::size_t>();
      const auto cols = t.at("cols").get<std::size_t>();
      if (cols != 0 && rows > (blob.size() - offset) / 8 / cols) data_error("artifact: tensor data too short");
      std::vector<double> values(rows * cols);
      for (auto& v : values) {
        v = std::bit_cast<double>(get_uint(blob, offset, 8));
        offset += 8;
      }
      if (!r.tensors.emplace(t.at("name").get<std::string>(), Matrix(rows, cols, std::move(values))).second) {
        data_error("artifact: duplicate tensor name");
      }
    }
    if (offset != blob.size()) data_error("artifact: tensor data length disagrees with the header");
    Predictor p = read_header(h, r, options);
    if (!r.tensors.empty()) data_error("artifact: unexpected tensor '" + r.tensors.begin()->first + "'");
    if (info) {
      info->format_version = version;
      info->toolkit_version = h.at("toolkit_version").get<std::string>();
    }
    return p;
  } catch (const json::exception& e) {
    data_error(std::string("artifact: malformed header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::not_found || e.code() == ErrorCode::data) throw;
    data_error(std::string("artifact: ") + e.what());
  }
}

void save_artifact(const Predictor& predictor, const std::filesystem::path& path) {
  const std::string bytes = serialize_artifact(predictor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::not_found, "cannot write artifact: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::internal, "short write to artifact: " + path.string());
}

Predictor load_artifact(const std::filesystem::path& path, LoadOptions options, ArtifactInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot open artifact: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (options.base_dir.empty()) options.base_dir = path.parent_path();
  return parse_artifact(buf.str(), options, info);
}

}  // namespace qadaa::app
