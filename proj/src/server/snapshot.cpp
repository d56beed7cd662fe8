#include "vcm/server/snapshot.hpp"

#include <cstdio>
#include <fcntl.h>
#include <fstream>
#include <openssl/evp.h>
#include <sstream>
#include <unistd.h>

#include "vcm/errors.hpp"

namespace vcm::server {

namespace {

constexpr const char* kMagic = "vcm-snapshot 1 sha256:";

nlohmann::ordered_json state_json(const SessionState& st) {
    using oj = nlohmann::ordered_json;
    oj j;
    j["session_id"] = st.session_id;
    j["config"] = config_to_json(st.config);
    j["tokens"] = st.tokens;
    j["phase"] = to_string(st.phase);
    j["round"] = st.round;
    j["joined"] = st.joined;
    auto subs = oj::array();
    for (const auto& s : st.submissions) subs.push_back(s ? oj(*s) : oj(nullptr));
    j["submissions"] = subs;
    j["acks"] = st.acks;
    j["started_at"] = st.log.header.started_at;
    j["finished_at"] = st.log.header.finished_at;
    j["complete"] = st.log.header.complete;
    auto recs = oj::array();
    for (const auto& r : st.log.records)
        recs.push_back(oj::array({r.round, r.subject_id, r.group_id, r.contribution, r.earnings}));
    j["records"] = recs;
    return j;
}

SessionState state_from_json(const nlohmann::json& j) {
    auto st = new_session(j.at("session_id").get<std::string>(), config_from_json(j.at("config")),
                          j.at("tokens").get<std::vector<std::string>>(),
                          j.at("started_at").get<std::string>());
    st.phase = parse_phase(j.at("phase").get<std::string>());
    st.round = j.at("round").get<int>();
    st.joined = j.at("joined").get<std::vector<bool>>();
    st.acks = j.at("acks").get<std::vector<bool>>();
    st.submissions.clear();
    for (const auto& s : j.at("submissions"))
        st.submissions.push_back(s.is_null() ? std::nullopt : std::optional<Tokens>(s.get<Tokens>()));
    st.log.header.finished_at = j.at("finished_at").get<std::string>();
    st.log.header.complete = j.at("complete").get<bool>();
    for (const auto& r : j.at("records"))
        st.log.records.push_back({st.session_id, r.at(0).get<int>(), r.at(1).get<SubjectId>(),
                                  r.at(2).get<GroupId>(), r.at(3).get<Tokens>(), r.at(4).get<double>()});
    const auto n = static_cast<std::size_t>(st.config.session_size());
    if (st.joined.size() != n || st.acks.size() != n || st.submissions.size() != n)
        throw StructuralError("snapshot vectors do not match the session size");
    return st;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open snapshot");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<int> verified_rounds(const std::string& path) {
    try {
        return parse_state(read_file(path)).log.completed_rounds();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string serialize_state(const SessionState& state) {
    const auto body = state_json(state).dump();
    return std::string(kMagic) + sha256_hex(body) + "\n" + body + "\n";
}

SessionState parse_state(const std::string& text) {
    const auto nl = text.find('\n');
    const std::string magic(kMagic);
    if (nl == std::string::npos || text.compare(0, magic.size(), magic) != 0)
        throw StructuralError("not a snapshot");
    const auto digest = text.substr(magic.size(), nl - magic.size());
    auto body = text.substr(nl + 1);
    if (body.empty() || body.back() != '\n') throw StructuralError("truncated snapshot");
    body.pop_back();
    if (sha256_hex(body) != digest) throw StructuralError("snapshot checksum mismatch");
    try {
        return state_from_json(nlohmann::json::parse(body));
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("snapshot decode: ") + e.what());
    }
}

void save_snapshot(const SessionState& state, const std::string& path) {
    const auto text = serialize_state(state);
    const auto tmp = path + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (fd < 0) throw IoError(tmp, "cannot create");
    std::size_t done = 0;
    while (done < text.size()) {
        const auto w = ::write(fd, text.data() + done, text.size() - done);
        if (w <= 0) {
            ::close(fd);
            throw IoError(tmp, "write failed");
        }
        done += static_cast<std::size_t>(w);
    }
    ::fsync(fd);
    ::close(fd);
    // Hard-link the current file to .prev so `path` is never missing.
    if (::access(path.c_str(), F_OK) == 0) {
        const auto prev_tmp = path + ".prev.tmp";
        ::unlink(prev_tmp.c_str());
        if (::link(path.c_str(), prev_tmp.c_str()) == 0) std::rename(prev_tmp.c_str(), (path + ".prev").c_str());
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError(path, "rename failed");
}

SessionState load_snapshot(const std::string& path) {
    const auto text = read_file(path);
    try {
        return parse_state(text);
    } catch (const StructuralError& e) {
        throw SnapshotCorrupt(path + ": " + e.what(), verified_rounds(path + ".prev"));
    } catch (const DomainError& e) {
        throw SnapshotCorrupt(path + ": " + e.what(), verified_rounds(path + ".prev"));
    }
}

}  // namespace vcm::server
