#include "chainwatch/synth.hpp"

#include "chainwatch/classifier.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <string_view>

namespace chainwatch {
namespace {

// Short spellings: "String" for Ljava/lang/String, single letters as-is.
std::size_t io_index(std::string_view name) {
  const auto& ids = Vocabulary::defaults().io_types.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string_view id = ids[i];
    if (id == name) return i;
    auto slash = id.rfind('/');
    if (slash != std::string_view::npos && id.substr(slash + 1) == name) return i;
  }
  throw Error("synth: unknown io type " + std::string(name));
}

std::uint8_t package_index(std::string_view name) {
  const auto& ids = Vocabulary::defaults().packages.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string_view id = ids[i];
    auto slash = id.rfind('/');
    if (id.substr(slash + 1) == name) return static_cast<std::uint8_t>(i);
  }
  throw Error("synth: unknown package " + std::string(name));
}

struct Api {
  std::string_view name;
  Category category;
  std::string_view package;
  std::initializer_list<std::string_view> in;
  std::initializer_list<std::string_view> out;
  Scope scope = Scope::kPrimordial;
};

InstructionCall make_call(const Api& api) {
  InstructionCall c;
  c.api_name = std::string(api.name);
  c.category = api.category;
  c.scope = api.scope;
  c.package = package_index(api.package);
  for (auto t : api.in) ++c.inputs[io_index(t)];
  for (auto t : api.out) ++c.outputs[io_index(t)];
  return c;
}

using C = Category;

const Api kSources[] = {
    {"readLine", C::kInvokeVirtual, "BufferedReader", {}, {"String"}},
    {"getenv", C::kInvokeStatic, "System", {"String"}, {"String"}},
    {"getProperty", C::kInvokeVirtual, "Properties", {"String"}, {"String"}},
    {"getInputStream", C::kInvokeVirtual, "Socket", {}, {"InputStream"}},
    {"openStream", C::kInvokeVirtual, "URL", {}, {"InputStream"}},
    {"getProperty", C::kInvokeStatic, "System", {"String", "String"}, {"String"}},
    {"read", C::kInvokeVirtual, "InputStreamReader", {}, {"I"}},
    {"getResultSet", C::kInvokeInterface, "Statement", {}, {"ResultSet"}},
    {"get", C::kInvokeVirtual, "HashMap", {"Object"}, {"Object"}},
    {"getQuery", C::kInvokeVirtual, "URL", {}, {"String"}},
    {"getHeaderField", C::kInvokeVirtual, "URLConnection", {"String"}, {"String"}},
    {"list", C::kInvokeVirtual, "File", {}, {"String"}},
};
constexpr std::size_t kSourceCount = std::size(kSources);

struct SinkSpec {
  Api sink;
  std::vector<Api> props;
};

struct CweSpec {
  std::string_view cwe;
  std::string_view slug;
  std::size_t exploits;
  std::vector<SinkSpec> sinks;
};

// Exploit j of a CWE uses sink j % m and source (base + j / m) % 12, so
// every (source, sink) pair is unique.
const std::vector<CweSpec>& cwe_table() {
  static const std::vector<CweSpec> table = {
      {"CWE-15", "config", 2,
       {{{"setCatalog", C::kInvokeInterface, "Connection", {"String"}, {"V"}},
         {{"trim", C::kInvokeVirtual, "String", {}, {"String"}}}}}},
      {"CWE-23", "path", 1,
       {{{"<init>", C::kInvokeSpecial, "FileInputStream", {"String"}, {"V"}},
         {{"concat", C::kInvokeVirtual, "String", {"String"}, {"String"}}}}}},
      {"CWE-78", "cmdi", 2,
       {{{"exec", C::kInvokeVirtual, "Runtime", {"String"}, {"Object"}},
         {{"append", C::kInvokeVirtual, "StringBuilder", {"String"}, {"StringBuilder"}},
          {"toString", C::kInvokeVirtual, "StringBuilder", {}, {"String"}}}}}},
      {"CWE-81", "xss", 1,
       {{{"sendError", C::kInvokeInterface, "HttpServletResponse", {"I", "String"}, {"V"}},
         {{"replace", C::kInvokeVirtual, "String", {"String", "String"}, {"String"}}}}}},
      {"CWE-89", "sqli", 10,
       {{{"executeQuery", C::kInvokeInterface, "Statement", {"String"}, {"ResultSet"}},
         {{"append", C::kInvokeVirtual, "StringBuilder", {"String"}, {"StringBuilder"}},
          {"toString", C::kInvokeVirtual, "StringBuilder", {}, {"String"}}}},
        {{"executeUpdate", C::kInvokeInterface, "Statement", {"String"}, {"I"}},
         {{"concat", C::kInvokeVirtual, "String", {"String"}, {"String"}}}},
        {{"execute", C::kInvokeInterface, "Statement", {"String"}, {"Z"}},
         {{"format", C::kInvokeStatic, "String", {"String", "Object"}, {"String"}}}},
        {{"prepareStatement", C::kInvokeInterface, "Connection", {"String"}, {"PreparedStatement"}},
         {{"valueOf", C::kInvokeStatic, "String", {"Object"}, {"String"}}}},
        {{"addBatch", C::kInvokeInterface, "Statement", {"String"}, {"V"}},
         {{"substring", C::kInvokeVirtual, "String", {"I"}, {"String"}}}}}},
      {"CWE-90", "ldapi", 1,
       {{{"search", C::kInvokeInterface, "Properties", {"String", "String"}, {"Object"}},
         {{"toLowerCase", C::kInvokeVirtual, "String", {}, {"String"}}}}}},
      {"CWE-129", "index", 14,
       {{{"iaload", C::kBinaryOp, "Integer", {"I"}, {"I"}},
         {{"parseInt", C::kInvokeStatic, "Integer", {"String"}, {"I"}}}},
        {{"iastore", C::kBinaryOp, "Integer", {"I", "I"}, {"V"}},
         {{"decode", C::kInvokeStatic, "Integer", {"String"}, {"Object"}},
          {"intValue", C::kInvokeVirtual, "Integer", {}, {"I"}}}},
        {{"aaload", C::kBinaryOp, "Integer", {"I"}, {"Object"}},
         {{"parseUnsignedInt", C::kInvokeStatic, "Integer", {"String"}, {"I"}}}}}},
      {"CWE-134", "fmt", 3,
       {{{"printf", C::kInvokeVirtual, "System", {"String", "Object"}, {"Object"}},
         {{"strip", C::kInvokeVirtual, "String", {}, {"String"}}}}}},
      {"CWE-190", "overflow", 3,
       {{{"imul", C::kBinaryOp, "Integer", {"I", "I"}, {"I"}},
         {{"valueOf", C::kInvokeStatic, "Integer", {"String"}, {"Object"}},
          {"intValue", C::kInvokeVirtual, "Integer", {}, {"I"}}}}}},
      {"CWE-191", "underflow", 5,
       {{{"isub", C::kBinaryOp, "Integer", {"I", "I"}, {"I"}},
         {{"sum", C::kInvokeStatic, "Integer", {"I", "I"}, {"I"}}}},
        {{"lsub", C::kBinaryOp, "Integer", {"J", "J"}, {"J"}},
         {{"longValue", C::kInvokeVirtual, "Integer", {}, {"J"}}}}}},
      {"CWE-197", "truncation", 6,
       {{{"i2s", C::kConversion, "Integer", {"I"}, {"S"}},
         {{"shortValue", C::kInvokeVirtual, "Integer", {}, {"S"}}}},
        {{"i2b", C::kConversion, "Integer", {"I"}, {"B"}},
         {{"byteValue", C::kInvokeVirtual, "Integer", {}, {"B"}}}}}},
      {"CWE-226", "uncleared", 1,
       {{{"put", C::kInvokeVirtual, "HashMap", {"Object", "Object"}, {"Object"}},
         {{"toCharArray", C::kInvokeVirtual, "String", {}, {"Object"}}}}}},
      {"CWE-256", "plainpass", 1,
       {{{"setProperty", C::kInvokeVirtual, "Properties", {"String", "String"}, {"Object"}},
         {}}}},
      {"CWE-259", "hardpass", 1,
       {{{"getConnection", C::kInvokeStatic, "DriverManager", {"String", "String", "String"}, {"Connection"}},
         {}}}},
      {"CWE-319", "cleartext", 2,
       {{{"setRequestProperty", C::kInvokeVirtual, "URLConnection", {"String", "String"}, {"V"}},
         {{"getBytes", C::kInvokeVirtual, "String", {}, {"Object"}}}}}},
      {"CWE-369", "divzero", 10,
       {{{"idiv", C::kBinaryOp, "Integer", {"I", "I"}, {"I"}},
         {{"parseInt", C::kInvokeStatic, "Integer", {"String"}, {"I"}},
          {"abs", C::kInvokeStatic, "Integer", {"I"}, {"I"}}}},
        {{"irem", C::kBinaryOp, "Integer", {"I", "I"}, {"I"}},
         {{"signum", C::kInvokeStatic, "Integer", {"I"}, {"I"}}}},
        {{"ldiv", C::kBinaryOp, "Integer", {"J", "J"}, {"J"}},
         {{"toUnsignedLong", C::kInvokeStatic, "Integer", {"I"}, {"J"}}}}}},
      {"CWE-400", "exhaustion", 6,
       {{{"sleep", C::kInvokeStatic, "Thread", {"J"}, {"V"}},
         {{"rotateLeft", C::kInvokeStatic, "Integer", {"I", "I"}, {"I"}}}},
        {{"join", C::kInvokeVirtual, "Thread", {"J"}, {"V"}},
         {{"reverse", C::kInvokeStatic, "Integer", {"I"}, {"I"}}}}}},
      {"CWE-470", "reflection", 1,
       {{{"forName", C::kInvokeStatic, "Class", {"String"}, {"Object"}},
         {{"intern", C::kInvokeVirtual, "String", {}, {"String"}}}}}},
      {"CWE-506", "embedded", 1,
       {{{"load", C::kInvokeStatic, "System", {"String"}, {"V"}}, {}}}},
      {"CWE-570", "alwaysfalse", 1,
       {{{"equals", C::kInvokeVirtual, "String", {"Object"}, {"Z"}},
         {{"hashCode", C::kInvokeVirtual, "Integer", {}, {"I"}}}}}},
      {"CWE-606", "loopcond", 3,
       {{{"if_icmplt", C::kBinaryOp, "Integer", {"I", "I"}, {"Z"}},
         {{"highestOneBit", C::kInvokeStatic, "Integer", {"I"}, {"I"}}}}}},
      {"CWE-643", "xpathi", 1,
       {{{"evaluate", C::kInvokeInterface, "URLConnection", {"String", "Object"}, {"String"}},
         {{"toUpperCase", C::kInvokeVirtual, "String", {}, {"String"}}}}}},
      {"CWE-789", "alloc", 3,
       {{{"<init>", C::kInvokeSpecial, "HashMap", {"I"}, {"V"}},
         {{"bitCount", C::kInvokeStatic, "Integer", {"I"}, {"I"}}}}}},
  };
  return table;
}

const Api kDistractors[] = {
    {"length", C::kInvokeVirtual, "String", {}, {"I"}},
    {"isEmpty", C::kInvokeVirtual, "String", {}, {"Z"}},
    {"currentThread", C::kInvokeStatic, "Thread", {}, {"Object"}},
    {"getName", C::kInvokeVirtual, "Class", {}, {"String"}},
    {"info", C::kInvokeVirtual, "Logger", {"String"}, {"V"}},
    {"log", C::kInvokeVirtual, "Logger", {"Level", "String", "Throwable"}, {"V"}},
    {"close", C::kInvokeVirtual, "BufferedReader", {}, {"V"}},
    {"exists", C::kInvokeVirtual, "File", {}, {"Z"}},
    {"containsKey", C::kInvokeVirtual, "HashMap", {"Object"}, {"Z"}},
    {"getRuntime", C::kInvokeStatic, "Runtime", {}, {"Object"}},
    {"nanoTime", C::kInvokeStatic, "System", {}, {"J"}},
    {"toString", C::kInvokeStatic, "Integer", {"I"}, {"String"}},
    {"setContentType", C::kInvokeInterface, "HttpServletResponse", {"String"}, {"V"}},
    {"getAutoCommit", C::kInvokeInterface, "Connection", {}, {"Z"}},
};

const Api kWhiteListed[] = {
    {"getCaughtException", C::kGetCaughtException, "Thread", {}, {"Throwable"}},
    {"phi", C::kPhi, "Integer", {"I", "I"}, {"I"}},
    {"checkcast", C::kConversion, "String", {"Object"}, {"String"}},
    {"out", C::kGetStatic, "System", {}, {"Object"}},
};

struct Chain {
  ExploitId id;
  InstructionCall source;
  std::vector<InstructionCall> props;
  InstructionCall sink;
};

std::string label_for(const CweSpec& cwe, const Api& source, const Api& sink) {
  std::string s(cwe.slug);
  s += '_';
  s += source.name;
  s += '_';
  for (char ch : sink.name) {
    if (ch != '<' && ch != '>') s += ch;
  }
  return s;
}

// Selected exploit ids spread evenly over the full table.
std::vector<ExploitId> select_ids(std::size_t n) {
  std::vector<ExploitId> ids;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(static_cast<ExploitId>(i * kExploitCount / n));
  }
  return ids;
}

class ProgramBuilder {
 public:
  explicit ProgramBuilder(std::string name) { sdg_.name = std::move(name); }

  NodeId entry() { return add(NodeKind::kEntry, std::nullopt); }
  NodeId statement(NodeId fn, InstructionCall call) {
    auto id = add(NodeKind::kStatement, std::move(call));
    sdg_.add_edge({fn, id, EdgeLabel::kControl});
    return id;
  }
  NodeId node(NodeId fn, NodeKind kind) {
    auto id = add(kind, std::nullopt);
    sdg_.add_edge({fn, id, EdgeLabel::kControl});
    return id;
  }
  void edge(NodeId a, NodeId b, EdgeLabel l = EdgeLabel::kData) { sdg_.add_edge({a, b, l}); }
  Sdg take() { return std::move(sdg_); }

 private:
  NodeId add(NodeKind kind, std::optional<InstructionCall> call) {
    SdgNode n;
    const NodeId id = next_++;
    n.id = id;
    n.kind = kind;
    n.instruction = std::move(call);
    sdg_.add_node(std::move(n));
    return id;
  }

  Sdg sdg_;
  NodeId next_ = 0;
};

InstructionCall app_call(std::string name) {
  InstructionCall c;
  c.api_name = std::move(name);
  c.category = Category::kInvokeStatic;
  c.scope = Scope::kApplication;
  c.package = package_index("Thread");
  ++c.inputs[io_index("String")];
  return c;
}

// variant % 3: 0 = single method, 1 = source in caller and the rest in a
// callee (param_in), 2 = source in a callee returned to the caller
// (param_out).
Sdg build_program(const Chain& chain, std::size_t variant, std::size_t distractors,
                  std::mt19937_64& rng) {
  ProgramBuilder b("e" + std::to_string(chain.id) + "_v" + std::to_string(variant));
  const NodeId main = b.entry();
  std::vector<NodeId> path;
  const auto shape = variant % 3;

  if (shape == 0) {
    path.push_back(b.statement(main, chain.source));
    for (const auto& p : chain.props) path.push_back(b.statement(main, p));
    path.push_back(b.statement(main, chain.sink));
    for (std::size_t i = 0; i + 1 < path.size(); ++i) b.edge(path[i], path[i + 1]);
  } else if (shape == 1) {
    const NodeId src = b.statement(main, chain.source);
    const NodeId site = b.statement(main, app_call("handle"));
    const NodeId ain = b.node(main, NodeKind::kActualIn);
    const NodeId callee = b.entry();
    const NodeId fin = b.node(callee, NodeKind::kFormalIn);
    b.edge(site, callee, EdgeLabel::kCall);
    b.edge(src, ain);
    b.edge(ain, fin, EdgeLabel::kParamIn);
    NodeId prev = fin;
    for (const auto& p : chain.props) {
      auto id = b.statement(callee, p);
      b.edge(prev, id);
      prev = id;
    }
    b.edge(prev, b.statement(callee, chain.sink));
    path = {src, callee};
  } else {
    const NodeId site = b.statement(main, app_call("fetch"));
    const NodeId aout = b.node(main, NodeKind::kActualOut);
    const NodeId callee = b.entry();
    const NodeId src = b.statement(callee, chain.source);
    const NodeId fout = b.node(callee, NodeKind::kFormalOut);
    b.edge(site, callee, EdgeLabel::kCall);
    b.edge(src, fout);
    b.edge(fout, aout, EdgeLabel::kParamOut);
    NodeId prev = aout;
    for (const auto& p : chain.props) {
      auto id = b.statement(main, p);
      b.edge(prev, id);
      prev = id;
    }
    b.edge(prev, b.statement(main, chain.sink));
    path = {src, main};
  }

  // Benign statements: data edges only among themselves, plus dead-end
  // uses of the source value.
  std::vector<std::size_t> pool(std::size(kDistractors));
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<NodeId> extra;
  for (std::size_t i = 0; i < distractors && i < pool.size(); ++i) {
    extra.push_back(b.statement(main, make_call(kDistractors[pool[i]])));
  }
  for (std::size_t i = 0; i + 1 < extra.size(); i += 2) b.edge(extra[i], extra[i + 1]);
  if (!extra.empty()) b.edge(path.front(), extra.back());
  std::uniform_int_distribution<std::size_t> pick_white(0, std::size(kWhiteListed) - 1);
  for (int i = 0; i < 2; ++i) b.statement(main, make_call(kWhiteListed[pick_white(rng)]));
  return b.take();
}

}  // namespace

SynthBundle synthesize(const SynthConfig& config) {
  if (config.exploits == 0 || config.exploits > kExploitCount) {
    throw Error("synth: exploit count must be in [1, 79]");
  }
  if (config.variants == 0) throw Error("synth: need at least one program per exploit");

  std::vector<Chain> chains;
  std::vector<FingerprintSpec> all;
  std::size_t base = 0;
  for (const auto& cwe : cwe_table()) {
    const auto m = cwe.sinks.size();
    for (std::size_t j = 0; j < cwe.exploits; ++j) {
      const auto& sink = cwe.sinks[j % m];
      const auto& source = kSources[(base + j / m) % kSourceCount];
      Chain chain{static_cast<ExploitId>(all.size()), make_call(source), {}, make_call(sink.sink)};
      FingerprintSpec spec;
      spec.exploit_id = chain.id;
      spec.cwe_id = std::string(cwe.cwe);
      spec.label = label_for(cwe, source, sink.sink);
      spec.templates.push_back(chain.source);
      spec.roles.push_back(TemplateRole::kSource);
      for (const auto& p : sink.props) {
        chain.props.push_back(make_call(p));
        spec.templates.push_back(chain.props.back());
        spec.roles.push_back(TemplateRole::kNone);
      }
      spec.templates.push_back(chain.sink);
      spec.roles.push_back(TemplateRole::kSink);
      chains.push_back(std::move(chain));
      all.push_back(std::move(spec));
    }
    base += 5;
  }
  if (all.size() != kExploitCount) throw Error("synth: CWE table does not sum to 79");

  SynthBundle bundle;
  for (const auto& w : kWhiteListed) bundle.whitelist.insert(std::string(w.name));
  std::mt19937_64 rng(config.seed);
  for (auto id : select_ids(config.exploits)) {
    bundle.fingerprints.push_back(all[id]);
    for (std::size_t v = 0; v < config.variants; ++v) {
      bundle.programs.push_back(build_program(chains[id], v, config.distractors, rng));
    }
  }
  return bundle;
}

void write_synth(const std::filesystem::path& dir, const SynthBundle& bundle,
                 const Vocabulary& vocab) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "sdg");
  {
    std::ofstream f(dir / "fingerprints.txt");
    write_fingerprint_specs(f, bundle.fingerprints, vocab);
    if (!f) throw FormatError("failed writing fingerprints.txt");
  }
  {
    std::ofstream w(dir / "whitelist.txt");
    for (const auto& name : bundle.whitelist.names()) w << name << '\n';
    if (!w) throw FormatError("failed writing whitelist.txt");
  }
  for (std::size_t i = 0; i < bundle.programs.size(); ++i) {
    auto n = std::to_string(i);
    n = std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n;
    std::ofstream s(dir / "sdg" / (n + ".sdg"));
    write_sdg(s, bundle.programs[i], vocab);
    if (!s) throw FormatError("failed writing " + n + ".sdg");
  }
}

}  // namespace chainwatch
