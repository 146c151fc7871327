@problemName Fixture
@timeStamps false
@missing false
@univariate false
@dimensions 2
@equalLength true
@seriesLength 5
@classLabel true up down flat
@data
0.1,0.2,0.3,0.4,0.5:1,2,3,4,5:up
0.5,0.4,0.3,0.2,0.1:-1,-2,-3,-4,-5:down
0,0,0,0,0:0.25,0.25,0.25,0.25,0.25:flat
0.0000001,2.5,-0.125,3,4:6,7,8,9,10:up
