// Regenerates the committed replay fixture for the AEB demo. The fixture
// keys responses by SHA-256 of the exact prompt the pipeline builds, so it
// must be rebuilt whenever the prompt templates or the AEB input files
// change:
//
//   evchain-fixturegen <assets-dir> <out-fixture.json>

#include "evchain/event_chain.hpp"
#include "evchain/llm.hpp"
#include "evchain/sha256.hpp"
#include "evchain/text.hpp"

#include <iostream>
#include <map>

using namespace evchain;

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: evchain-fixturegen <assets-dir> <out-fixture.json>\n";
        return 2;
    }
    const std::string assets = argv[1];

    try {
        std::string requirements = read_file(assets + "/aeb/requirements.txt");
        ingest::ComponentRegistry reg = ingest::parse_component_registry(
            read_file(assets + "/aeb/component_registry.json"));
        ingest::SignalRegistry sig = ingest::parse_signal_registry(
            read_file(assets + "/aeb/signal_registry.json"));
        std::string chain_json = read_file(assets + "/aeb/event_chain.json");
        ingest::EventChainDescription desc = ingest::parse_event_chain(chain_json);

        std::map<std::string, std::string> responses;

        std::string chain_prompt = llm::build_prompt(
            llm::PromptKind::EventChain,
            {{"requirements", requirements},
             {"existing_components", ingest::component_registry_to_json(reg)},
             {"existing_signals", ingest::signal_registry_to_json(sig)}});
        responses[sha256_hex(chain_prompt)] =
            "Here is the event chain for the requested system.\n\n```json\n" +
            chain_json + "```\n";

        ingest::ComponentDiff diff = ingest::diff_components(desc, reg);
        for (const auto& name : diff.to_generate) {
            const ingest::ComponentDesc* comp = nullptr;
            for (const auto& c : desc.components)
                if (c.name == name)
                    comp = &c;
            std::string prompt = llm::build_prompt(
                llm::PromptKind::FunctionCode,
                {{"submodule_description", ingest::component_to_json(*comp)}});
            std::string code = read_file(assets + "/aeb/reference_code/" + name + ".py");
            responses[sha256_hex(prompt)] =
                "```python\n" + code + "```\n";
        }

        write_file(argv[2], llm::fixture_to_json("replay-demo", responses));
        std::cout << "wrote " << argv[2] << " (" << responses.size()
                  << " responses)\n";
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
