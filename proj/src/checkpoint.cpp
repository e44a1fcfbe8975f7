#include "evseg/checkpoint.hpp"

#include <fstream>

#include "evseg/common.hpp"

namespace evseg {

namespace {
constexpr const char* kMagic = "EVSEGTENSORS1";
}

void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, const Tensor*>>& tensors,
                  const nlohmann::json& meta) {
    nlohmann::json manifest;
    manifest["meta"] = meta;
    manifest["tensors"] = nlohmann::json::array();
    int64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        manifest["tensors"].push_back({{"name", name},
                                       {"shape", t->shape},
                                       {"dtype", "float64"},
                                       {"offset", offset},
                                       {"count", t->size()}});
        offset += t->size() * static_cast<int64_t>(sizeof(double));
    }
    const std::string header = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    check_data(out.good(), "cannot open " + path + " for writing");
    out << kMagic << "\n" << header.size() << "\n" << header << "\n";
    for (const auto& [name, t] : tensors)
        out.write(reinterpret_cast<const char*>(t->data()),
                  static_cast<std::streamsize>(t->size() * sizeof(double)));
    check_data(out.good(), "write failed for " + path);
}

TensorArchive load_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check_data(in.good(), "cannot open " + path);
    std::string magic;
    std::getline(in, magic);
    check_data(magic == kMagic, "not a tensor archive: " + path);
    std::string size_line;
    std::getline(in, size_line);
    size_t header_size = 0;
    try {
        header_size = std::stoull(size_line);
    } catch (const std::logic_error&) {
        throw DataError("corrupt header size in " + path);
    }
    std::string header(header_size, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_size));
    check_data(in.gcount() == static_cast<std::streamsize>(header_size),
               "truncated manifest in " + path);
    in.get();  // newline after the manifest

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(header);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("bad manifest in " + path + ": " + e.what());
    }

    const std::streampos blob_start = in.tellg();
    TensorArchive archive;
    archive.meta = manifest.value("meta", nlohmann::json::object());
    for (const auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name");
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        check_data(entry.at("dtype") == "float64", "unsupported dtype for " + name);
        const int64_t count = entry.at("count");
        const int64_t offset = entry.at("offset");
        Tensor t(shape);
        check_data(t.size() == count, "count/shape mismatch for " + name + " in " + path);
        in.seekg(blob_start + static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        check_data(in.gcount() == static_cast<std::streamsize>(count * sizeof(double)),
                   "truncated payload for " + name + " in " + path);
        archive.tensors.emplace(name, std::move(t));
    }
    return archive;
}

}  // namespace evseg
