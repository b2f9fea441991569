#include "doctest.h"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mpimux/k8s.hpp"

using namespace mpimux;
using namespace mpimux::k8s;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), "missing file ", path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Minimal indentation-based reader: collects `key` and `key: value` lines
// into dotted paths, ignoring comments and list dashes.
std::map<std::string, std::string> yaml_fields(const std::string& text) {
    std::map<std::string, std::string> fields;
    std::vector<std::pair<int, std::string>> stack; // (indent, key)
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        int indent = 0;
        while (indent < static_cast<int>(line.size()) &&
               (line[indent] == ' ' || line[indent] == '-'))
            ++indent;
        std::string body = line.substr(indent);
        if (body.empty()) continue;
        const auto colon = body.find(':');
        if (colon == std::string::npos) continue;
        std::string key = body.substr(0, colon);
        std::string value = colon + 1 < body.size() ? body.substr(colon + 2) : "";
        while (!stack.empty() && stack.back().first >= indent) stack.pop_back();
        std::string path;
        for (const auto& [ind, k] : stack) path += k + ".";
        path += key;
        stack.emplace_back(indent, key);
        if (!value.empty()) fields[path] = value;
    }
    return fields;
}

} // namespace

TEST_CASE("pod names are lowercase and injective over (sim, rank)") {
    CHECK(pod_name("A", 0) == "of-worker-a-0");
    CHECK(pod_name("B", 15) == "of-worker-b-15");
    std::map<std::string, int> seen;
    for (const std::string sim : {"A", "B", "C"})
        for (int r = 0; r < 20; ++r) ++seen[pod_name(sim, r)];
    CHECK(seen.size() == 60);
    CHECK_THROWS_AS(pod_name("", 0), InputError);
    CHECK_THROWS_AS(pod_name("a/b", 0), InputError);
    CHECK_THROWS_AS(pod_name("A", -1), InputError);
}

TEST_CASE("the sparse-rank pod manifest matches the golden file") {
    const auto manifest = emit_pod_manifest({"A", 0, "openfoam-k8s:v10", 67});
    const auto golden =
        read_file(std::string(MPIMUX_SOURCE_DIR) + "/tests/golden/pod_manifest_a0.yaml");
    CHECK(manifest == golden);
}

TEST_CASE("manifests carry requests and a resize policy but never limits") {
    const auto manifest = emit_pod_manifest({"B", 15, "openfoam-k8s:v10", 1005});
    CHECK(manifest.find("name: of-worker-b-15") != std::string::npos);
    CHECK(manifest.find("sim: B") != std::string::npos);
    CHECK(manifest.find("cpu: \"1005m\"") != std::string::npos);
    CHECK(manifest.find("limits") == std::string::npos);
    CHECK(manifest.find("restartPolicy: NotRequired") != std::string::npos);

    auto fields = yaml_fields(manifest);
    CHECK(fields.at("metadata.name") == "of-worker-b-15");
    CHECK(fields.at("metadata.labels.app") == "openfoam");
    CHECK(fields.at("metadata.labels.role") == "worker");
    CHECK(fields.at("metadata.labels.sim") == "B");
    CHECK(fields.at("spec.containers.image") == "openfoam-k8s:v10");
    CHECK(fields.at("spec.containers.resources.requests.cpu") == "\"1005m\"");
    CHECK(fields.at("spec.containers.resizePolicy.resourceName") == "cpu");
    CHECK(fields.at("spec.containers.resizePolicy.restartPolicy") == "NotRequired");
    CHECK(fields.count("spec.containers.resources.limits") == 0);

    CHECK_THROWS_AS(emit_pod_manifest({"A", 0, "openfoam-k8s:v10", 0}), ConstraintError);
}

TEST_CASE("hostfile configmaps list one slot per pod IP") {
    const auto cm = emit_hostfile_configmap("A", {"10.0.0.1", "10.0.0.2"});
    CHECK(cm.find("name: hostfile-a") != std::string::npos);
    CHECK(cm.find("10.0.0.1 slots=1\n") != std::string::npos);
    CHECK(cm.find("10.0.0.2 slots=1\n") != std::string::npos);

    std::vector<std::string> sixteen;
    for (int i = 0; i < 16; ++i) sixteen.push_back("10.0.1." + std::to_string(i));
    const auto big = emit_hostfile_configmap("B", sixteen);
    std::size_t lines = 0, pos = 0;
    while ((pos = big.find("slots=1", pos)) != std::string::npos) {
        ++lines;
        pos += 7;
    }
    CHECK(lines == 16);

    CHECK_THROWS_AS(emit_hostfile_configmap("A", {}), InputError);
    CHECK_THROWS_AS(emit_hostfile_configmap("A", {"10.0.0.1", "10.0.0.1"}), InputError);
}

TEST_CASE("resize patches update only the container CPU request") {
    const auto patch = emit_resize_patch("of-worker-a-0", 179);
    CHECK(patch ==
          R"({"spec":{"containers":[{"name":"openfoam","resources":{"requests":{"cpu":"179m"}}}]}})");
    // emitting the current value is the caller's decision, not an error
    CHECK(emit_resize_patch("of-worker-a-0", 179) == patch);
    CHECK_THROWS_AS(emit_resize_patch("of-worker-a-0", 9), ConstraintError);
    CHECK_THROWS_AS(emit_resize_patch("", 100), InputError);
    CHECK_THROWS_AS(emit_resize_patch("bad name", 100), InputError);
}

TEST_CASE("mpirun commands pin MPI to TCP transport") {
    const auto cmd = emit_mpirun_command("A", 16, "/config/hostfile");
    CHECK(cmd.find("--mca btl tcp,self") != std::string::npos);
    CHECK(cmd.find("-np 16") != std::string::npos);
    CHECK(cmd.find("--hostfile /config/hostfile") != std::string::npos);

    CHECK(emit_mpirun_command("B", 1, "/h").find("-np 1") != std::string::npos);
    CHECK_THROWS_AS(emit_mpirun_command("A", 0, "/h"), InputError);
    CHECK_THROWS_AS(emit_mpirun_command("A", 16, ""), InputError);
}
