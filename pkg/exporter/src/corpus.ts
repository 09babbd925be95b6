/** Built-in sample text used when no corpus file is given. */

export const SAMPLE_TEXT = `The harbor wakes slowly in the gray hour before sunrise. Rope creaks against
wet wood, and the first gulls argue over scraps near the fish stalls. A kettle
whistles somewhere behind a shuttered window. The tide has been going out all
night, and the moored boats sit lower now, leaning a little toward the channel
as if impatient for deeper water.

By midmorning the quay is loud with small commerce. Crates of oranges stack
beside coils of blue nylon line. A woman sells bread from a cart with a
squeaking wheel, and two kids race paper boats along the gutter after the
street cleaner passes. Everyone watches the sky without meaning to. Weather on
this coast arrives without much warning, shouldering in from the west behind a
line of low cloud, and the older sailors claim they can smell it an hour out.

The lighthouse keeper keeps a notebook of such claims. Forty years of entries,
each one dated in pencil: the angle of smoke from the cannery chimney, which
way the cormorants flew, how the light bent over the shoals at dusk. Most
entries end with a short verdict, right or wrong, and a tally runs along the
margin. He says the notebook has taught him humility more than forecasting.
Still, the tallies lean slightly toward right, and he is quietly proud of the
margin.

Inland, the hills fold into orchards and stone walls. Apples grow small and
sharp here, better for cider than for eating, and in October the presses run
all day until the whole valley smells sweet and faintly of vinegar. Wasps
stagger between the pomace heaps. Farmers trade pressing time the way
fishermen trade berths, by memory and favor, with ledgers kept in heads rather
than books.

The train to the city runs twice a day, and the platform has exactly one
bench. A timetable in a glass case lists departures that have not changed in a
decade. Regulars stand in their accustomed spots anyway, spaced along the
platform like beads on a string, each one knowing precisely where the doors
will stop. Visitors can be identified by their wandering, their checking of
the glass case, their surprise at the shortness of the train.

At night the harbor turns over its sounds. The market noise drains away and
what remains is structural: water against pilings, the tick of cooling metal,
a halyard tapping a mast with the patience of a metronome. The lighthouse
sweeps its beam across the breakwater every nine seconds. Counted long enough,
the interval becomes less a number than a pulse, something the town keeps time
by without ever agreeing to.`;
