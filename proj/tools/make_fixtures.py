#!/usr/bin/env python3
# Copyright 2026 The hwloop Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the scripted transcripts under tests/fixtures/transcripts."""
import pathlib

import yaml

ROOT = pathlib.Path(__file__).resolve().parent.parent
ASSETS = ROOT / "assets" / "suite"
VERILOG = ROOT / "tests" / "fixtures" / "verilog"
OUT = ROOT / "tests" / "fixtures" / "transcripts"


class Block(str):
    pass


def block_repr(dumper, data):
    return dumper.represent_scalar("tag:yaml.org,2002:str", data, style="|")


yaml.add_representer(Block, block_repr)


def fenced(lead, code, tail=""):
    text = lead + "\n\n```verilog\n" + code.rstrip() + "\n```\n"
    if tail:
        text += "\n" + tail + "\n"
    return Block(text)


def write(name, replies, feedback=None):
    doc = {"replies": replies}
    if feedback:
        doc["feedback"] = feedback
    path = OUT / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.dump(doc, sort_keys=False, width=1000))


def read(path):
    return path.read_text()


def main():
    suite = yaml.safe_load(read(ASSETS / "suite.yaml"))
    for b in suite["benchmarks"]:
        write(
            f"golden/{b['id']}.yaml",
            [
                fenced("Here is a design that meets the specification:", read(ASSETS / b["golden_design"])),
                fenced("Here is a self-checking testbench:", read(ASSETS / b["golden_testbench"])),
            ],
        )

    write(
        "sr_tool_feedback.yaml",
        [
            fenced("Here is an 8-bit shift register:", read(VERILOG / "sr_design.v")),
            fenced("Here is a testbench for the shift register:", read(VERILOG / "sr_tb_bad.v")),
            fenced("Here is the corrected testbench:", read(VERILOG / "sr_tb_fixed.v")),
        ],
    )

    bard = read(VERILOG / "sr_bard.v")
    write("bard_six_takes.yaml", [{"takes": [fenced("Sure, here is the module:", bard)] * 6}])

    abro_wrong = """module abro (
    input wire clk,
    input wire reset_n,
    input wire a,
    input wire b,
    output wire o,
    output reg [3:0] state
);

always @(posedge clk or negedge reset_n) begin
    if (!reset_n)
        state <= 4'b0001;
    else if (a || b)
        state <= 4'b1000;
end

assign o = state[3];

endmodule
"""
    abro_weak_tb = """`timescale 1ns/1ps
module abro_tb;
reg clk = 0, reset_n = 0, a = 0, b = 0;
wire o;
wire [3:0] state;
abro dut (.clk(clk), .reset_n(reset_n), .a(a), .b(b), .o(o), .state(state));
always #5 clk = ~clk;
initial begin
    #12 reset_n = 1;
    a = 1; @(posedge clk); #1 a = 0;
    b = 1; @(posedge clk); #1 b = 0;
    @(posedge clk); #1;
    if (o !== 1'b1) $display("Error: o should be high after a and b. Received: %b", o);
    $display("All test cases passed!");
    $finish;
end
endmodule
"""
    write(
        "abro_noncompliant.yaml",
        [fenced("Here is the ABRO state machine:", abro_wrong), fenced("And a testbench:", abro_weak_tb)],
    )

    dice_const = """module dice_roller (
    input wire clk,
    input wire reset_n,
    input wire [1:0] die_select,
    input wire roll,
    output reg [7:0] rolled_number
);

always @(posedge clk or negedge reset_n) begin
    if (!reset_n)
        rolled_number <= 8'd0;
    else if (roll)
        rolled_number <= 8'd1;
end

endmodule
"""
    dice_tb = """`timescale 1ns/1ps
module dice_roller_tb;
reg clk = 0, reset_n = 0, roll = 0;
reg [1:0] die_select = 0;
wire [7:0] rolled_number;
dice_roller dut (.clk(clk), .reset_n(reset_n), .die_select(die_select), .roll(roll), .rolled_number(rolled_number));
always #5 clk = ~clk;
initial begin
    #12 reset_n = 1;
    roll = 1; @(posedge clk); #1 roll = 0;
    if (rolled_number < 1 || rolled_number > 4) $display("Error: roll out of range. Received: %0d", rolled_number);
    $display("All test cases passed!");
    $finish;
end
endmodule
"""
    write("dice_constant.yaml", [fenced("Dice roller:", dice_const), fenced("Testbench:", dice_tb)])

    golden_sr = read(ASSETS / "shift_register.v")
    tb_fixed = read(VERILOG / "sr_tb_fixed.v")
    no_finish = tb_fixed.replace("    $finish;\n", "")
    write(
        "no_finish.yaml",
        [
            fenced("Shift register:", golden_sr),
            fenced("Testbench:", no_finish),
            fenced("The simulation never ends; here is the testbench with $finish:", tb_fixed),
        ],
    )

    broken = golden_sr.replace("data_out <= {data_out[6:0], data_in};", "data_out <= {data_out[6:0], data_in}")
    write(
        "shf_escalation.yaml",
        [
            fenced("Shift register:", broken),
            fenced("Testbench:", tb_fixed),
            fenced("Fixed design:", broken),
            fenced("Fixed design, second attempt:", broken),
            fenced("Thanks, the semicolon was missing:", golden_sr),
        ],
        feedback=[{"level": "SHF", "text": Block("There is a syntax error in the shift assignment.\n")}],
    )


if __name__ == "__main__":
    main()
