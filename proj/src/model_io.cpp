#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "eqa/corpus.hpp"
#include "eqa/error.hpp"
#include "eqa/learner.hpp"
#include "eqa/text.hpp"
#include "json_util.hpp"

static_assert(std::endian::native == std::endian::little, "model files are written on little-endian hosts only");

namespace eqa {

namespace {

using nlohmann::json;

constexpr std::string_view magic = "EQAM";

template <typename T>
void put(std::string& out, T value)
{
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get()
    {
        T value;
        std::memcpy(&value, take(sizeof(T)).data(), sizeof(T));
        return value;
    }

    std::string_view take(std::size_t n)
    {
        if (n > bytes_.size() - pos_) {
            fail(ErrorKind::corrupt, "model file is truncated");
        }
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    [[nodiscard]] std::size_t position() const noexcept { return pos_; }

  private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

json header_of(const Model& m)
{
    const auto& f = m.features;
    const auto layout = f.layout();
    json blocks = json::array();
    for (auto b : all_blocks) {
        blocks.push_back({{"name", block_name(b)}, {"offset", layout.offset(b)}, {"size", layout.size(b)}});
    }
    json zeroed = json::array();
    for (auto b : all_blocks) {
        if (f.mask.zeroed[static_cast<std::size_t>(b)]) {
            zeroed.push_back(block_name(b));
        }
    }
    const auto& t = m.train;
    return json{
        {"config",
         {{"C", t.C},
          {"beam", t.beam},
          {"outer_iters", t.outer_iters},
          {"inner_epochs", t.inner_epochs},
          {"eta0", t.eta0},
          {"seed", t.seed},
          {"rho", t.rho},
          {"task_scheme", to_string(t.scheme)},
          {"negation", t.negation},
          {"joint_review", t.joint_review},
          {"L", f.snippet_max},
          {"K", f.knowledge_k},
          {"H4", f.rst_cells},
          {"lambda", f.tree_decay},
          {"bm25_k1", f.bm25.k1},
          {"bm25_b", f.bm25.b},
          {"ablate", zeroed},
          {"no_knowledge", f.mask.no_knowledge}}},
        {"layout", {{"dim", layout.dim()}, {"blocks", blocks}}},
        {"tasks", m.tasks},
    };
}

void apply_header(const json& h, Model& m)
{
    const auto& c = h.at("config");
    auto& t = m.train;
    t.C = c.at("C").get<double>();
    t.beam = c.at("beam").get<std::size_t>();
    t.outer_iters = c.at("outer_iters").get<std::size_t>();
    t.inner_epochs = c.at("inner_epochs").get<std::size_t>();
    t.eta0 = c.at("eta0").get<double>();
    t.seed = c.at("seed").get<std::uint64_t>();
    t.rho = c.at("rho").get<double>();
    auto scheme = parse_task_scheme(c.at("task_scheme").get<std::string>());
    if (!scheme) {
        fail(ErrorKind::corrupt, "model header names an unknown task scheme");
    }
    t.scheme = *scheme;
    t.negation = c.at("negation").get<bool>();
    t.joint_review = c.at("joint_review").get<bool>();
    auto& f = m.features;
    f.snippet_max = c.at("L").get<std::size_t>();
    f.knowledge_k = c.at("K").get<std::size_t>();
    f.rst_cells = c.at("H4").get<std::size_t>();
    f.tree_decay = c.at("lambda").get<double>();
    f.bm25.k1 = c.at("bm25_k1").get<double>();
    f.bm25.b = c.at("bm25_b").get<double>();
    for (const auto& name : c.at("ablate")) {
        auto b = parse_block(name.get<std::string>());
        if (!b) {
            fail(ErrorKind::corrupt, "model header names an unknown block");
        }
        f.mask.zeroed[static_cast<std::size_t>(*b)] = true;
    }
    f.mask.no_knowledge = c.at("no_knowledge").get<bool>();
    m.scheme = t.scheme;
    m.tasks = h.at("tasks").get<std::size_t>();

    const auto layout = f.layout();
    if (h.at("layout").at("dim").get<std::size_t>() != layout.dim()) {
        fail(ErrorKind::corrupt, "model layout descriptor disagrees with its configuration");
    }
    for (const auto& b : h.at("layout").at("blocks")) {
        auto block = parse_block(b.at("name").get<std::string>());
        if (!block || b.at("offset").get<std::size_t>() != layout.offset(*block)
            || b.at("size").get<std::size_t>() != layout.size(*block)) {
            fail(ErrorKind::corrupt, "model layout descriptor disagrees with its configuration");
        }
    }
}

}  // namespace

std::string model_header_json(const Model& model)
{
    return header_of(model).dump();
}

std::string encode_model(const Model& model)
{
    model.check_layout();
    std::string out(magic);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.version.size()));
    out += model.version;
    const auto header = model_header_json(model);
    put<std::uint64_t>(out, header.size());
    out += header;
    put<std::uint64_t>(out, model.weights.size());
    for (double w : model.weights) {
        put<double>(out, w);
    }
    put<std::uint64_t>(out, fnv1a64(out));
    return out;
}

Model decode_model(std::string_view bytes)
{
    Reader r(bytes);
    if (r.take(magic.size()) != magic) {
        fail(ErrorKind::corrupt, "not a model file");
    }
    const auto version_length = r.get<std::uint32_t>();
    const std::string version(r.take(version_length));
    if (version != model_version) {
        fail(ErrorKind::version, "model file version \"" + version + "\" does not match reader version \""
                                     + std::string(model_version) + "\"");
    }
    const auto header_length = r.get<std::uint64_t>();
    const auto header_text = r.take(header_length);
    const auto count = r.get<std::uint64_t>();
    if (count > (bytes.size() - r.position()) / sizeof(double)) {
        fail(ErrorKind::corrupt, "model file is truncated");
    }
    Model m;
    m.version = version;
    m.weights.resize(count);
    for (auto& w : m.weights) {
        w = r.get<double>();
    }
    const auto body = bytes.substr(0, r.position());
    if (r.get<std::uint64_t>() != fnv1a64(body)) {
        fail(ErrorKind::corrupt, "model file content hash mismatch");
    }
    if (r.position() != bytes.size()) {
        fail(ErrorKind::corrupt, "trailing bytes after model content");
    }
    try {
        apply_header(json::parse(header_text), m);
    } catch (const json::exception& e) {
        fail(ErrorKind::corrupt, std::string("model header: ") + e.what());
    }
    try {
        m.check_layout();
    } catch (const Error& e) {
        fail(ErrorKind::corrupt, e.what());
    }
    return m;
}

void save_model(const Model& model, const std::filesystem::path& path)
{
    const auto bytes = encode_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::io, "cannot write \"" + path.string() + "\"");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorKind::io, "write to \"" + path.string() + "\" failed");
    }
}

Model load_model(const std::filesystem::path& path)
{
    return decode_model(read_file(path));
}

}  // namespace eqa
